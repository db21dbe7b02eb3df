#include "qaworld/dataset.hpp"

#include <cctype>

namespace qaworld {

std::string_view to_string(Split s) { return s == Split::train ? "train" : "test"; }
std::string_view to_string(Variant v) { return v == Variant::en ? "en" : "shuffled"; }

std::size_t Dataset::question_count() const {
    std::size_t n = 0;
    for (const Story& s : stories)
        for (const StoryLine& l : s.lines) n += l.kind == LineKind::question;
    return n;
}

std::string emit_babi(const Dataset& ds) {
    std::string out;
    for (const Story& s : ds.stories) {
        for (const StoryLine& l : s.lines) {
            out += std::to_string(l.number);
            out += ' ';
            out += l.text;
            if (l.kind == LineKind::question) {
                out += '\t';
                for (std::size_t i = 0; i < l.answers.size(); ++i) {
                    if (i) out += ',';
                    out += l.answers[i];
                }
                out += '\t';
                for (std::size_t i = 0; i < l.supporting.size(); ++i) {
                    if (i) out += ' ';
                    out += std::to_string(l.supporting[i]);
                }
            }
            out += '\n';
        }
    }
    return out;
}

namespace {

// Positive decimal without sign or leading zeros.
bool parse_positive(std::string_view s, int& value) {
    if (s.empty() || s.size() > 9 || s[0] == '0') return false;
    value = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    return true;
}

bool clean_text(std::string_view s) {
    if (s.empty() || s.front() == ' ' || s.back() == ' ') return false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c < 0x20 || c == 0x7f) return false;
        if (c == ' ' && i + 1 < s.size() && s[i + 1] == ' ') return false;
    }
    return true;
}

} // namespace

Dataset parse_babi(std::string_view text) {
    Dataset ds;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    std::vector<bool> is_statement;  // per line number of the current story
    while (pos < text.size()) {
        ++line_no;
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) throw ParseError(line_no, "missing final newline");
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;

        auto space = line.find(' ');
        if (space == std::string_view::npos) throw ParseError(line_no, "expected line number and text");
        int number = 0;
        if (!parse_positive(line.substr(0, space), number)) throw ParseError(line_no, "bad line number");
        if (number == 1) {
            ds.stories.emplace_back();
            is_statement.assign(1, false);
        } else if (ds.stories.empty() || number != ds.stories.back().lines.back().number + 1) {
            throw ParseError(line_no, "line number " + std::to_string(number) + " breaks the sequence");
        }

        StoryLine l;
        l.number = number;
        std::string_view rest = line.substr(space + 1);
        auto tab = rest.find('\t');
        if (tab == std::string_view::npos) {
            if (!clean_text(rest)) throw ParseError(line_no, "malformed statement text");
            l.kind = LineKind::statement;
            l.text = std::string(rest);
        } else {
            l.kind = LineKind::question;
            std::string_view q = rest.substr(0, tab);
            std::string_view tail = rest.substr(tab + 1);
            auto tab2 = tail.find('\t');
            if (tab2 == std::string_view::npos) throw ParseError(line_no, "question lacks supporting ids");
            std::string_view answers = tail.substr(0, tab2);
            std::string_view ids = tail.substr(tab2 + 1);
            if (ids.find('\t') != std::string_view::npos) throw ParseError(line_no, "too many tab fields");
            if (!clean_text(q)) throw ParseError(line_no, "malformed question text");
            l.text = std::string(q);
            std::size_t start = 0;
            while (true) {
                auto comma = answers.find(',', start);
                std::string_view a = answers.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
                if (a.empty() || a.find(' ') != std::string_view::npos) throw ParseError(line_no, "malformed answer list");
                l.answers.emplace_back(a);
                if (comma == std::string_view::npos) break;
                start = comma + 1;
            }
            if (ids.empty()) throw ParseError(line_no, "question lacks supporting ids");
            start = 0;
            while (true) {
                auto sp = ids.find(' ', start);
                std::string_view id = ids.substr(start, sp == std::string_view::npos ? std::string_view::npos : sp - start);
                int v = 0;
                if (!parse_positive(id, v)) throw ParseError(line_no, "malformed supporting id");
                if (!l.supporting.empty() && v <= l.supporting.back())
                    throw ParseError(line_no, "supporting ids not strictly ascending");
                if (v >= number) throw ParseError(line_no, "supporting id does not precede the question");
                if (!is_statement[v]) throw ParseError(line_no, "supporting id refers to a question");
                l.supporting.push_back(v);
                if (sp == std::string_view::npos) break;
                start = sp + 1;
            }
        }
        is_statement.push_back(l.kind == LineKind::statement);
        ds.stories.back().lines.push_back(std::move(l));
    }
    return ds;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        unsigned char c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '_' || c == '\'' || c == '-') {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<QaExample> extract_examples(const Dataset& ds) {
    std::vector<QaExample> out;
    for (const Story& s : ds.stories) {
        std::vector<std::vector<std::string>> memory;
        std::vector<int> memory_index(s.lines.size() + 2, -1);  // line number -> memory slot
        for (const StoryLine& l : s.lines) {
            if (l.kind == LineKind::statement) {
                if (l.number < static_cast<int>(memory_index.size())) memory_index[l.number] = static_cast<int>(memory.size());
                memory.push_back(tokenize(l.text));
                continue;
            }
            QaExample ex;
            ex.memory = memory;
            ex.question = tokenize(l.text);
            ex.answer = l.answers;
            for (int id : l.supporting)
                if (id < static_cast<int>(memory_index.size()) && memory_index[id] >= 0)
                    ex.supporting.push_back(memory_index[id]);
            ex.task = ds.task;
            out.push_back(std::move(ex));
        }
    }
    return out;
}

} // namespace qaworld
