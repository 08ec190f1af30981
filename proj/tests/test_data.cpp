#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>

#include "stand/data.hpp"
#include "stand/errors.hpp"

using namespace stand;
namespace fs = std::filesystem;

static data::SceneSpec small_spec(std::uint64_t seed = 3) {
    data::SceneSpec spec;
    spec.seed = seed;
    spec.grid_size = 32;
    return spec;
}

TEST_CASE("scene spec validation") {
    data::SceneSpec spec = small_spec();
    spec.grid_size = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = small_spec();
    spec.categories.clear();
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec = small_spec();
    spec.change_probability = 1.5f;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("corpus generation is deterministic") {
    auto a = data::generate_corpus(small_spec(), 12);
    auto b = data::generate_corpus(small_spec(), 12);
    REQUIRE(a.size() == 12);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(max_abs_diff(a[i].image_before, b[i].image_before) == 0.0f);
        CHECK(max_abs_diff(a[i].image_after, b[i].image_after) == 0.0f);
        CHECK(a[i].captions == b[i].captions);
    }
}

TEST_CASE("change rate and category balance follow the schedule") {
    data::SceneSpec spec = small_spec(9);
    auto samples = data::generate_corpus(spec, 200);
    int changed = 0;
    std::vector<int> per_cat(spec.categories.size(), 0);
    for (const auto& s : samples) {
        if (!s.is_no_change) ++changed;
        for (size_t c = 0; c < s.change_labels.size(); ++c) per_cat[c] += s.change_labels[c];
    }
    CHECK(changed == doctest::Approx(100).epsilon(0.1));
    int lo = *std::min_element(per_cat.begin(), per_cat.end());
    int hi = *std::max_element(per_cat.begin(), per_cat.end());
    CHECK(lo > 0);
    // schedule keeps usage within +-20% of the mean
    double mean = double(lo + hi) / 2;
    CHECK(hi <= 1.2 * mean + 1);
    CHECK(lo >= 0.8 * mean - 1);
}

TEST_CASE("captions agree with change labels and masks") {
    data::SceneSpec spec = small_spec(5);
    auto samples = data::generate_corpus(spec, 60);
    for (const auto& s : samples) {
        bool any_label = false;
        for (int v : s.change_labels) any_label |= v != 0;
        CHECK(any_label == !s.is_no_change);
        float mask_sum = 0;
        for (float v : s.mask_gt.data) mask_sum += v;
        if (s.is_no_change) {
            CHECK(mask_sum == 0.0f);
            CHECK(s.captions[0] == "there is no change");
        } else {
            CHECK(mask_sum > 0.0f);
            // every changed category is named in the caption
            for (size_t c = 0; c < s.change_labels.size(); ++c)
                if (s.change_labels[c])
                    CHECK(s.captions[0].find(spec.categories[c]) != std::string::npos);
        }
    }
}

TEST_CASE("small-scale samples occupy under the area threshold") {
    data::SceneSpec spec = small_spec(21);
    auto samples = data::generate_corpus(spec, 120);
    int small_count = 0;
    for (const auto& s : samples) {
        if (!s.small_scale) continue;
        ++small_count;
        float area = 0;
        for (float v : s.mask_gt.data) area += v;
        // small-scale means every changed object is below the threshold, so
        // the union mask is bounded by objects x per-object threshold
        int n_changed = 0;
        for (int l : s.change_labels) n_changed += l;
        REQUIRE(n_changed > 0);
        CHECK(area / (spec.grid_size * spec.grid_size) <
              n_changed * data::kSmallObjectAreaFraction);
    }
    CHECK(small_count > 0);
}

TEST_CASE("naive diff mask matches the definition") {
    Tensor before({3, 2, 2}), after({3, 2, 2});
    after.data[0] = 0.9f;  // pixel (0,0) differs in one channel: mean diff 0.3
    Tensor m = data::naive_diff_mask(before, after, 0.1f);
    CHECK(m.data[0] == 1.0f);
    CHECK(m.data[1] == 0.0f);
    CHECK_THROWS_AS(data::naive_diff_mask(before, after, 0.0f), ConfigError);
    CHECK_THROWS_AS(data::naive_diff_mask(before, after, 1.0f), ConfigError);
}

TEST_CASE("tokenizer lowercases and strips punctuation") {
    CHECK(data::tokenize("A new Building, appears!") ==
          std::vector<std::string>{"a", "new", "building", "appears"});
    CHECK(data::tokenize("").empty());
}

TEST_CASE("vocabulary round trip with reserved ids") {
    auto samples = data::generate_corpus(small_spec(4), 30);
    data::Vocabulary v = data::Vocabulary::from_corpus(samples);
    CHECK(v.tokens[data::Vocabulary::kPad] == "<pad>");
    CHECK(v.tokens[data::Vocabulary::kBos] == "<bos>");
    std::vector<int> ids = v.encode("a new building appears");
    CHECK(ids.front() == data::Vocabulary::kBos);
    CHECK(ids.back() == data::Vocabulary::kEos);
    CHECK(v.decode(ids) == "a new building appears");
    // unknown words map to <unk>
    std::vector<int> unk = v.encode("a new spaceship appears");
    CHECK(std::count(unk.begin(), unk.end(), data::Vocabulary::kUnk) == 1);
}

TEST_CASE("tensor file round trip and format errors") {
    fs::path dir = fs::temp_directory_path() / "stand_ten_test";
    fs::create_directories(dir);
    Rng rng(2);
    Tensor t = randn({2, 3, 4}, rng);
    std::string path = (dir / "t.ten").string();
    data::write_tensor_file(t, path);
    Tensor r = data::read_tensor_file(path);
    CHECK(r.shape == t.shape);
    CHECK(max_abs_diff(r, t) == 0.0f);

    std::ofstream bad(dir / "bad.ten", std::ios::binary);
    bad << "NOPE";
    bad.close();
    CHECK_THROWS_AS(data::read_tensor_file((dir / "bad.ten").string()), FormatError);
    CHECK_THROWS_AS(data::read_tensor_file((dir / "missing.ten").string()), FormatError);
}

TEST_CASE("dataset round trip preserves samples and vocabulary") {
    fs::path dir = fs::temp_directory_path() / "stand_ds_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    data::SceneSpec spec = small_spec(6);
    auto samples = data::generate_corpus(spec, 8);
    data::write_dataset(samples, spec, dir.string());
    data::Dataset ds = data::read_dataset(dir.string());
    REQUIRE(ds.samples.size() == samples.size());
    CHECK(ds.spec.categories == spec.categories);
    for (size_t i = 0; i < samples.size(); ++i) {
        CHECK(max_abs_diff(ds.samples[i].image_before, samples[i].image_before) == 0.0f);
        CHECK(ds.samples[i].captions == samples[i].captions);
        CHECK(ds.samples[i].change_labels == samples[i].change_labels);
    }
    // error paths name the missing piece
    fs::remove(dir / "captions.jsonl");
    CHECK_THROWS_WITH_AS(data::read_dataset(dir.string()),
                         doctest::Contains("captions.jsonl"), FormatError);
}
