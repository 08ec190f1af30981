#pragma once

#include <map>
#include <string>
#include <vector>

#include "stand/tensor.hpp"

namespace stand::data {

// Fraction of image pixels below which a changed object counts as small.
constexpr float kSmallObjectAreaFraction = 0.02f;

struct SceneSpec {
    std::uint64_t seed = 0;
    int grid_size = 64;
    std::vector<std::string> categories = {"building", "road", "parking lot", "vegetation", "water"};
    int max_objects = 4;
    float change_probability = 0.5f;
    float small_object_fraction = 0.3f;

    void validate() const;  // throws ConfigError
};

struct Sample {
    Tensor image_before;  // [3,H,W], values in [0,1]
    Tensor image_after;   // [3,H,W]
    Tensor mask_gt;       // [1,H,W], binary
    std::vector<std::string> captions;  // >= 1, template grammar
    std::vector<int> change_labels;     // per-category 0/1
    bool is_no_change = false;
    bool small_scale = false;  // every changed object below the small-object threshold
};

// Deterministic pure function of (spec, count). Change/no-change and primary
// category assignment follow a derandomized schedule so category usage stays
// balanced across the corpus.
std::vector<Sample> generate_corpus(const SceneSpec& spec, int count);

// mask[h,w] = 1 iff mean_c |before - after| at (h,w) > threshold.
Tensor naive_diff_mask(const Tensor& before, const Tensor& after, float threshold);

// Lowercase, strip punctuation, whitespace split.
std::vector<std::string> tokenize(const std::string& text);

struct Vocabulary {
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    std::vector<std::string> tokens;  // position = id; 0..3 reserved
    std::map<std::string, int> index;

    int size() const { return static_cast<int>(tokens.size()); }
    static Vocabulary from_corpus(const std::vector<Sample>& samples);
    static Vocabulary from_tokens(std::vector<std::string> toks);  // includes reserved
    std::vector<int> encode(const std::string& sentence) const;    // <bos> ... <eos>
    std::string decode(const std::vector<int>& ids) const;         // drops specials
};

struct Dataset {
    SceneSpec spec;  // categories + grid size round-trip through meta.json
    std::vector<Sample> samples;
    Vocabulary vocab;
};

void write_dataset(const std::vector<Sample>& samples, const SceneSpec& spec, const std::string& path);
Dataset read_dataset(const std::string& path);

// Raw tensor container used for images/masks (little-endian float32).
void write_tensor_file(const Tensor& t, const std::string& path);
Tensor read_tensor_file(const std::string& path);

}  // namespace stand::data
