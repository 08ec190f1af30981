#include "stand/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stand/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace stand::data {

void SceneSpec::validate() const {
    if (grid_size < 16) throw ConfigError("SceneSpec: grid_size must be >= 16");
    if (grid_size % 16 != 0) throw ConfigError("SceneSpec: grid_size must be divisible by 16");
    if (categories.empty()) throw ConfigError("SceneSpec: empty category list");
    if (max_objects < 1) throw ConfigError("SceneSpec: max_objects must be >= 1");
    if (change_probability < 0.0f || change_probability > 1.0f)
        throw ConfigError("SceneSpec: change_probability outside [0,1]");
    if (small_object_fraction < 0.0f || small_object_fraction > 1.0f)
        throw ConfigError("SceneSpec: small_object_fraction outside [0,1]");
}

namespace {

struct Rect {
    int x0 = 0, y0 = 0, w = 0, h = 0;
    int cat = -1;
    bool overlaps(const Rect& o) const {
        return !(x0 + w + 1 <= o.x0 || o.x0 + o.w + 1 <= x0 || y0 + h + 1 <= o.y0 || o.y0 + o.h + 1 <= y0);
    }
};

struct Appearance {
    float r, g, b;
    float aspect;   // width / height
    float texture;  // per-pixel jitter amplitude
};

// "building" and "parking lot" share local appearance on purpose; only the
// footprint (aspect, area) tells them apart.
Appearance category_appearance(const std::string& name) {
    if (name == "building") return {0.72f, 0.18f, 0.18f, 1.0f, 0.03f};
    if (name == "parking lot") return {0.72f, 0.18f, 0.18f, 2.8f, 0.03f};
    if (name == "road") return {0.28f, 0.28f, 0.30f, 5.0f, 0.02f};
    if (name == "vegetation") return {0.10f, 0.55f, 0.15f, 1.2f, 0.08f};
    if (name == "water") return {0.10f, 0.25f, 0.70f, 1.5f, 0.03f};
    // hash-derived fallback palette for custom category lists
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    return {0.2f + 0.6f * ((h >> 8) % 97) / 97.0f, 0.2f + 0.6f * ((h >> 16) % 97) / 97.0f,
            0.2f + 0.6f * ((h >> 24) % 97) / 97.0f, 1.0f + ((h >> 32) % 30) / 10.0f, 0.04f};
}

Rect size_for(int S, float aspect, bool small, Rng& rng) {
    std::uniform_real_distribution<float> area_frac(small ? 0.008f : 0.05f, small ? 0.018f : 0.12f);
    float area = area_frac(rng) * static_cast<float>(S) * static_cast<float>(S);
    int h = std::max(1, static_cast<int>(std::lround(std::sqrt(area / aspect))));
    int w = std::max(1, static_cast<int>(std::lround(area / h)));
    w = std::min(w, S - 2);
    h = std::min(h, S - 2);
    if (small) {
        // keep strictly under the small-object threshold even after rounding
        while (w * h >= static_cast<int>(kSmallObjectAreaFraction * S * S) && w * h > 1) {
            if (w >= h) --w; else --h;
        }
        w = std::max(1, w);
        h = std::max(1, h);
    }
    return Rect{0, 0, w, h, -1};
}

bool place(Rect& r, int S, const std::vector<Rect>& existing, Rng& rng) {
    std::uniform_int_distribution<int> px(1, std::max(1, S - r.w - 1));
    std::uniform_int_distribution<int> py(1, std::max(1, S - r.h - 1));
    for (int attempt = 0; attempt < 60; ++attempt) {
        r.x0 = px(rng);
        r.y0 = py(rng);
        bool clash = false;
        for (const auto& e : existing)
            if (r.overlaps(e)) {
                clash = true;
                break;
            }
        if (!clash) return true;
    }
    return false;
}

void draw_rect(Tensor& img, const Rect& r, const Appearance& ap, Rng& rng) {
    int S = img.dim(1);
    std::uniform_real_distribution<float> jitter(-ap.texture, ap.texture);
    float base[3] = {ap.r, ap.g, ap.b};
    for (int y = r.y0; y < r.y0 + r.h; ++y)
        for (int x = r.x0; x < r.x0 + r.w; ++x) {
            float j = jitter(rng);
            for (int c = 0; c < 3; ++c)
                img.data[(static_cast<size_t>(c) * S + y) * S + x] =
                    std::clamp(base[c] + j, 0.0f, 1.0f);
        }
}

// Global brightness/tint jitter applied per frame: irrelevant pixel change
// that a caption must ignore.
void seasonal_jitter(Tensor& img, Rng& rng) {
    std::uniform_real_distribution<float> bright(0.92f, 1.08f);
    std::uniform_real_distribution<float> tint(-0.04f, 0.04f);
    float b = bright(rng);
    float t[3] = {tint(rng), tint(rng), tint(rng)};
    int S = img.dim(1);
    for (int c = 0; c < 3; ++c)
        for (int p = 0; p < S * S; ++p) {
            float& v = img.data[static_cast<size_t>(c) * S * S + p];
            v = std::clamp(v * b + t[c], 0.0f, 1.0f);
        }
}

std::string build_caption(const std::vector<std::string>& categories, const std::vector<int>& labels,
                          const std::vector<int>& directions) {
    std::vector<std::string> clauses;
    for (size_t i = 0; i < categories.size(); ++i) {
        if (!labels[i]) continue;
        if (directions[i] > 0)
            clauses.push_back("a new " + categories[i] + " appears");
        else
            clauses.push_back("the " + categories[i] + " has been removed");
    }
    if (clauses.empty()) return "there is no change";
    std::string out = clauses[0];
    for (size_t i = 1; i < clauses.size(); ++i) out += " and " + clauses[i];
    return out;
}

Sample generate_sample(const SceneSpec& spec, int index) {
    const int S = spec.grid_size;
    const int N = static_cast<int>(spec.categories.size());
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(index)));

    // derandomized change / category schedule keeps the corpus balanced
    double p = spec.change_probability;
    auto n_changes_before = [&](int i) {
        return static_cast<int>(std::floor(static_cast<double>(i) * p + 1e-9));
    };
    bool has_change = n_changes_before(index + 1) > n_changes_before(index);
    int k = n_changes_before(index);

    std::vector<int> labels(static_cast<size_t>(N), 0);
    std::vector<int> directions(static_cast<size_t>(N), 0);
    std::vector<int> changed_cats;
    if (has_change) {
        int primary = k % N;
        changed_cats.push_back(primary);
        if (N >= 2 && k % 4 == 3) {
            int second = (primary + 1 + (k / 4) % (N - 1)) % N;
            changed_cats.push_back(second);
        }
        std::uniform_int_distribution<int> coin(0, 1);
        for (int c : changed_cats) {
            labels[static_cast<size_t>(c)] = 1;
            directions[static_cast<size_t>(c)] = coin(rng) ? 1 : -1;
        }
    }

    Sample s;
    s.image_before = Tensor({3, S, S});
    s.image_after = Tensor({3, S, S});
    s.mask_gt = Tensor({1, S, S});

    // shared background
    std::uniform_real_distribution<float> bg_noise(-0.04f, 0.04f);
    float base[3] = {0.34f, 0.38f, 0.30f};
    for (int c = 0; c < 3; ++c)
        for (int p2 = 0; p2 < S * S; ++p2)
            s.image_before.data[static_cast<size_t>(c) * S * S + p2] =
                std::clamp(base[c] + bg_noise(rng), 0.0f, 1.0f);
    s.image_after.data = s.image_before.data;

    std::vector<Rect> placed;

    // changed objects first so they always find room
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    std::vector<std::pair<Rect, int>> change_rects;  // rect, direction
    bool all_small = !changed_cats.empty();
    for (int c : changed_cats) {
        Appearance ap = category_appearance(spec.categories[static_cast<size_t>(c)]);
        bool small = unit(rng) < spec.small_object_fraction;
        Rect r = size_for(S, ap.aspect, small, rng);
        r.cat = c;
        if (!place(r, S, placed, rng)) {
            // fall back to a small footprint; an empty change would break the
            // mask/label invariant
            r = size_for(S, 1.0f, true, rng);
            r.cat = c;
            if (!place(r, S, placed, rng)) {
                r.x0 = 1;
                r.y0 = 1;
            }
            small = true;
        }
        if (!small) all_small = false;
        placed.push_back(r);
        change_rects.emplace_back(r, directions[static_cast<size_t>(c)]);
    }
    s.small_scale = all_small;

    // unchanged distractors, never overlapping anything already placed
    std::uniform_int_distribution<int> n_distract(0, std::max(0, spec.max_objects - 1));
    std::uniform_int_distribution<int> pick_cat(0, N - 1);
    int nd = n_distract(rng);
    std::vector<Rect> distractors;
    for (int i = 0; i < nd; ++i) {
        int c = pick_cat(rng);
        Appearance ap = category_appearance(spec.categories[static_cast<size_t>(c)]);
        Rect r = size_for(S, ap.aspect, false, rng);
        r.cat = c;
        if (place(r, S, placed, rng)) {
            placed.push_back(r);
            distractors.push_back(r);
        }
    }

    // draw: distractors in both frames with identical texture
    for (const auto& r : distractors) {
        Appearance ap = category_appearance(spec.categories[static_cast<size_t>(r.cat)]);
        Rng tex(derive_seed(spec.seed, (static_cast<std::uint64_t>(index) << 20) + 7919u +
                                           static_cast<std::uint64_t>(r.x0 * S + r.y0)));
        Rng tex2 = tex;
        draw_rect(s.image_before, r, ap, tex);
        draw_rect(s.image_after, r, ap, tex2);
    }
    // changed objects in exactly one frame
    for (const auto& [r, dir] : change_rects) {
        Appearance ap = category_appearance(spec.categories[static_cast<size_t>(r.cat)]);
        draw_rect(dir > 0 ? s.image_after : s.image_before, r, ap, rng);
        for (int y = r.y0; y < r.y0 + r.h; ++y)
            for (int x = r.x0; x < r.x0 + r.w; ++x)
                s.mask_gt.data[static_cast<size_t>(y) * S + x] = 1.0f;
    }

    seasonal_jitter(s.image_before, rng);
    seasonal_jitter(s.image_after, rng);

    s.change_labels = labels;
    s.is_no_change = changed_cats.empty();
    if (s.is_no_change) s.small_scale = false;
    s.captions.push_back(build_caption(spec.categories, labels, directions));
    return s;
}

}  // namespace

std::vector<Sample> generate_corpus(const SceneSpec& spec, int count) {
    spec.validate();
    if (count < 1) throw ConfigError("generate_corpus: count must be >= 1");
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(generate_sample(spec, i));
    return out;
}

Tensor naive_diff_mask(const Tensor& before, const Tensor& after, float threshold) {
    if (!before.same_shape(after)) throw InputError("naive_diff_mask: shape mismatch");
    if (threshold <= 0.0f || threshold >= 1.0f) throw ConfigError("naive_diff_mask: threshold outside (0,1)");
    int H = before.dim(1), W = before.dim(2);
    Tensor mask({1, H, W});
    for (int p = 0; p < H * W; ++p) {
        float diff = 0.0f;
        for (int c = 0; c < 3; ++c)
            diff += std::fabs(before.data[static_cast<size_t>(c) * H * W + p] -
                              after.data[static_cast<size_t>(c) * H * W + p]);
        mask.data[static_cast<size_t>(p)] = (diff / 3.0f > threshold) ? 1.0f : 0.0f;
    }
    return mask;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        unsigned char u = static_cast<unsigned char>(ch);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (std::isspace(u) || std::ispunct(u)) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> toks) {
    Vocabulary v;
    v.tokens = std::move(toks);
    for (size_t i = 0; i < v.tokens.size(); ++i) v.index[v.tokens[i]] = static_cast<int>(i);
    return v;
}

Vocabulary Vocabulary::from_corpus(const std::vector<Sample>& samples) {
    std::set<std::string> uniq;
    for (const auto& s : samples)
        for (const auto& cap : s.captions)
            for (const auto& t : tokenize(cap)) uniq.insert(t);
    std::vector<std::string> toks = {"<pad>", "<bos>", "<eos>", "<unk>"};
    toks.insert(toks.end(), uniq.begin(), uniq.end());
    return from_tokens(std::move(toks));
}

std::vector<int> Vocabulary::encode(const std::string& sentence) const {
    std::vector<int> ids = {kBos};
    for (const auto& t : tokenize(sentence)) {
        auto it = index.find(t);
        ids.push_back(it == index.end() ? kUnk : it->second);
    }
    ids.push_back(kEos);
    return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) {
        if (id <= kUnk) continue;
        if (id >= size()) continue;
        if (!out.empty()) out += ' ';
        out += tokens[static_cast<size_t>(id)];
    }
    return out;
}

// --------------------------------------------------------------- on-disk I/O

void write_tensor_file(const Tensor& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("write_tensor_file: cannot open " + path);
    f.write("STEN", 4);
    std::uint8_t ver = 1, dtype = 0, rank = static_cast<std::uint8_t>(t.rank());
    f.write(reinterpret_cast<const char*>(&ver), 1);
    f.write(reinterpret_cast<const char*>(&dtype), 1);
    f.write(reinterpret_cast<const char*>(&rank), 1);
    for (int d : t.shape) {
        std::int32_t v = d;
        f.write(reinterpret_cast<const char*>(&v), 4);
    }
    f.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 4));
}

Tensor read_tensor_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("read_tensor_file: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "STEN", 4) != 0) throw FormatError("bad tensor magic in " + path);
    std::uint8_t ver = 0, dtype = 0, rank = 0;
    f.read(reinterpret_cast<char*>(&ver), 1);
    f.read(reinterpret_cast<char*>(&dtype), 1);
    f.read(reinterpret_cast<char*>(&rank), 1);
    if (!f || ver != 1 || dtype != 0) throw FormatError("unsupported tensor header in " + path);
    std::vector<int> shape(rank);
    for (auto& d : shape) {
        std::int32_t v = 0;
        f.read(reinterpret_cast<char*>(&v), 4);
        d = v;
    }
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 4));
    if (!f) throw FormatError("truncated tensor file " + path);
    return t;
}

namespace {

std::string sample_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%05d.ten", i);
    return buf;
}

}  // namespace

void write_dataset(const std::vector<Sample>& samples, const SceneSpec& spec, const std::string& path) {
    fs::create_directories(fs::path(path) / "images_before");
    fs::create_directories(fs::path(path) / "images_after");
    fs::create_directories(fs::path(path) / "masks");
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        int id = static_cast<int>(i);
        write_tensor_file(s.image_before, (fs::path(path) / "images_before" / sample_name(id)).string());
        write_tensor_file(s.image_after, (fs::path(path) / "images_after" / sample_name(id)).string());
        write_tensor_file(s.mask_gt, (fs::path(path) / "masks" / sample_name(id)).string());
    }
    {
        std::ofstream f((fs::path(path) / "captions.jsonl").string());
        for (size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            json rec = {{"id", i},
                        {"captions", s.captions},
                        {"change_labels", s.change_labels},
                        {"is_no_change", s.is_no_change},
                        {"small_scale", s.small_scale}};
            f << rec.dump() << "\n";
        }
    }
    {
        // closed template grammar: vocabulary is independent of which
        // templates a particular corpus happens to use
        std::set<std::string> uniq;
        for (const char* w : {"a", "new", "appears", "the", "has", "been", "removed", "and", "there",
                              "is", "no", "change"})
            uniq.insert(w);
        for (const auto& c : spec.categories)
            for (const auto& t : tokenize(c)) uniq.insert(t);
        std::ofstream f((fs::path(path) / "vocab.txt").string());
        f << "<pad>\n<bos>\n<eos>\n<unk>\n";
        for (const auto& t : uniq) f << t << "\n";
    }
    {
        json meta = {{"seed", spec.seed},
                     {"grid_size", spec.grid_size},
                     {"categories", spec.categories},
                     {"max_objects", spec.max_objects},
                     {"change_probability", spec.change_probability},
                     {"small_object_fraction", spec.small_object_fraction},
                     {"count", samples.size()}};
        std::ofstream f((fs::path(path) / "meta.json").string());
        f << meta.dump(2) << "\n";
    }
}

Dataset read_dataset(const std::string& path) {
    Dataset ds;
    fs::path root(path);
    if (!fs::exists(root / "captions.jsonl")) throw FormatError("missing captions.jsonl in " + path);
    if (!fs::exists(root / "vocab.txt")) throw FormatError("missing vocab.txt in " + path);
    if (fs::exists(root / "meta.json")) {
        std::ifstream f((root / "meta.json").string());
        json meta = json::parse(f);
        ds.spec.seed = meta.value("seed", 0ULL);
        ds.spec.grid_size = meta.value("grid_size", 64);
        ds.spec.categories = meta.value("categories", ds.spec.categories);
        ds.spec.max_objects = meta.value("max_objects", 4);
        ds.spec.change_probability = meta.value("change_probability", 0.5f);
        ds.spec.small_object_fraction = meta.value("small_object_fraction", 0.3f);
    }
    {
        std::vector<std::string> toks;
        std::ifstream f((root / "vocab.txt").string());
        std::string line;
        while (std::getline(f, line))
            if (!line.empty()) toks.push_back(line);
        if (toks.size() < 4 || toks[0] != "<pad>" || toks[1] != "<bos>" || toks[2] != "<eos>" ||
            toks[3] != "<unk>")
            throw FormatError("vocab.txt: reserved token header malformed in " + path);
        ds.vocab = Vocabulary::from_tokens(std::move(toks));
    }
    std::ifstream f((root / "captions.jsonl").string());
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError("captions.jsonl line " + std::to_string(lineno) + ": " + e.what());
        }
        Sample s;
        int id = rec.at("id").get<int>();
        s.captions = rec.at("captions").get<std::vector<std::string>>();
        s.change_labels = rec.at("change_labels").get<std::vector<int>>();
        s.is_no_change = rec.at("is_no_change").get<bool>();
        s.small_scale = rec.value("small_scale", false);
        auto img = root / "images_before" / sample_name(id);
        if (!fs::exists(img)) throw FormatError("missing tensor file " + img.string());
        s.image_before = read_tensor_file(img.string());
        s.image_after = read_tensor_file((root / "images_after" / sample_name(id)).string());
        s.mask_gt = read_tensor_file((root / "masks" / sample_name(id)).string());
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace stand::data
