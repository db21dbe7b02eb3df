#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "qaworld/dataset.hpp"
#include "qaworld/lexicon.hpp"
#include "qaworld/tasks.hpp"

namespace qaworld {

inline constexpr int kFormatVersion = 1;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SplitSpec {
    int task = 1;
    std::size_t n_train = 1000;
    std::size_t n_test = 1000;
    std::uint64_t seed = 0;
    Variant variant = Variant::en;
    std::uint64_t shuffle_seed = 0;  // used only by the shuffled variant
    TaskConfig config;               // defaults for the task when left empty
};

SplitSpec default_split_spec(int task, std::uint64_t seed);

struct SplitData {
    Dataset train;
    Dataset test;
};

// Train and test come from disjoint streams derived from (seed, task), so a
// smaller training set is always a prefix of a larger one.
SplitData make_split(const SplitSpec& spec, const Lexicon& lex = Lexicon::english());

// Flat key=value file, keys sorted.
struct Manifest {
    std::map<std::string, std::string> fields;

    const std::string& at(const std::string& key) const;
    std::string emit() const;
    static Manifest parse(std::string_view text);
};

std::string sha256_hex(std::string_view bytes);

// "qa1_single-supporting-fact_train.txt"
std::string split_file_name(int task, Split split);
std::string manifest_file_name(int task);

// Writes <out>/tasks/{train,test} files and the manifest; returns the manifest.
Manifest write_split(const SplitSpec& spec, const std::filesystem::path& out_dir,
                     const Lexicon& lex = Lexicon::english());

SplitSpec spec_from_manifest(const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Parses a dataset file; task and split are taken from the file name when it
// follows the qa{N}_{name}_{split}.txt layout.
Dataset read_dataset(const std::filesystem::path& path);

} // namespace qaworld
