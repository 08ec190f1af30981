#include "stand/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "stand/errors.hpp"
#include "stand/itc.hpp"

namespace stand {

using nlohmann::json;

void TrainConfig::validate() const {
    if (lambda_ca < 0 || lambda_cls < 0) throw ConfigError("trainer: lambdas must be >= 0");
    if (lr <= 0) throw ConfigError("trainer: learning rate must be > 0");
    if (batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
    if (steps < 1) throw ConfigError("trainer: steps must be >= 1");
    if (bn_freeze_fraction < 0 || bn_freeze_fraction > 1)
        throw ConfigError("trainer: bn_freeze_fraction must be in [0, 1]");
    if (weight_decay < 0) throw ConfigError("trainer: weight_decay must be >= 0");
}

static void check_finite(const ag::Var& v, const char* name) {
    if (!std::isfinite(v->value.data.at(0)))
        throw TrainError(std::string("trainer: non-finite loss component ") + name);
}

ag::Var total_loss(const LossBundle& bundle, float lambda_ca, float lambda_cls) {
    check_finite(bundle.l_cap, "l_cap");
    check_finite(bundle.l_ca, "l_ca");
    check_finite(bundle.l_cls, "l_cls");
    return ag::add(bundle.l_cap, ag::add(ag::scale(bundle.l_ca, lambda_ca),
                                         ag::scale(bundle.l_cls, lambda_cls)));
}

LossBundle batch_forward(StandModel& model, const data::Dataset& ds,
                         const std::vector<int>& indices, int caption_index, bool training) {
    if (indices.empty()) throw InputError("trainer: empty batch");
    const int B = static_cast<int>(indices.size());
    std::vector<SampleForward> fwds;
    fwds.reserve(indices.size());
    ag::Var cap_sum, cls_sum;
    for (int idx : indices) {
        SampleForward f =
            model.forward(ds.samples.at(idx), ds.vocab, caption_index, training);
        cap_sum = cap_sum ? ag::add(cap_sum, f.l_cap) : f.l_cap;
        cls_sum = cls_sum ? ag::add(cls_sum, f.l_cls) : f.l_cls;
        fwds.push_back(std::move(f));
    }
    LossBundle out;
    out.l_cap = ag::scale(cap_sum, 1.0f / B);
    out.l_cls = ag::scale(cls_sum, 1.0f / B);
    if (model.cfg.enable_itc) {
        std::vector<ag::Var> aft, pseudo;
        for (const SampleForward& f : fwds) {
            aft.push_back(f.emb_aft);
            pseudo.push_back(f.emb_pseudo);
        }
        const int n = model.cfg.itc.n_extra_negatives;
        std::vector<ag::Var> extras;
        if (n > 0) {
            // mismatched compositions: pair sample k's modulated before-frame
            // with the change feature of n other batch members
            for (int k = 0; k < B; ++k) {
                std::vector<ag::Var> rows;
                for (int m = 0; m < n; ++m) {
                    int j = (k + 1 + m) % B;
                    ag::Var mismatched = model.itc.synthesize_pseudo_after(
                        fwds[k].bef_mod, fwds[j].x_c, training);
                    rows.push_back(model.itc.embed_pseudo(mismatched));
                }
                extras.push_back(ag::stack_rows(rows));
            }
        }
        out.l_ca = transition_loss(ag::stack_rows(aft), ag::stack_rows(pseudo),
                                   model.cfg.itc.tau, extras, model.cfg.itc.l2_normalize);
    } else {
        out.l_ca = ag::constant(Tensor::scalar(0.0f));
    }
    return out;
}

std::vector<StepRecord> train(StandModel& model, const data::Dataset& ds, const TrainConfig& cfg,
                              nn::Adam* opt_in) {
    cfg.validate();
    if (ds.samples.empty()) throw InputError("trainer: empty dataset");
    std::ofstream log;
    if (!cfg.log_path.empty()) {
        log.open(cfg.log_path);
        if (!log) throw TrainError("trainer: cannot open log file " + cfg.log_path);
    }
    nn::Adam local_opt;
    nn::Adam& opt = opt_in ? *opt_in : local_opt;
    opt.lr = cfg.lr;
    opt.weight_decay = cfg.weight_decay;

    const int N = static_cast<int>(ds.samples.size());
    std::vector<int> perm(N);
    std::iota(perm.begin(), perm.end(), 0);
    int epoch = 0, pos = N;  // force a shuffle before the first batch

    std::vector<StepRecord> records;
    records.reserve(cfg.steps);
    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<int> batch;
        for (int b = 0; b < cfg.batch_size; ++b) {
            if (pos >= N) {
                Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
                std::shuffle(perm.begin(), perm.end(), rng);
                pos = 0;
                ++epoch;
            }
            batch.push_back(perm[pos++]);
        }
        model.ps.zero_grads();
        // cosine decay to a 10% floor stabilizes the late training phase
        opt.lr = cfg.lr * (0.55f + 0.45f * std::cos(std::acos(-1.0f) * step / cfg.steps));
        bool stats_live = step < static_cast<int>(cfg.steps * (1.0f - cfg.bn_freeze_fraction));
        LossBundle bundle = batch_forward(model, ds, batch, epoch, stats_live);
        ag::Var total = total_loss(bundle, cfg.lambda_ca, cfg.lambda_cls);
        StepRecord rec{step, bundle.l_cap->value.data[0], bundle.l_ca->value.data[0],
                       bundle.l_cls->value.data[0], total->value.data[0]};
        if (rec.total > 1e4f)
            throw TrainError("trainer: divergence at step " + std::to_string(step) +
                             " (total loss " + std::to_string(rec.total) + ")");
        ag::backward(total);
        opt.step(model.ps);
        records.push_back(rec);
        if (log) {
            char line[256];
            std::snprintf(line, sizeof(line),
                          "{\"step\":%d,\"l_cap\":%.9g,\"l_ca\":%.9g,\"l_cls\":%.9g,"
                          "\"total\":%.9g}\n",
                          rec.step, rec.l_cap, rec.l_ca, rec.l_cls, rec.total);
            log << line;
        }
    }
    return records;
}

namespace {

constexpr char kMagic[4] = {'S', 'T', 'C', 'K'};

void write_f32(std::ofstream& out, const std::vector<float>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(float)));
}

json tensor_entry(const std::string& name, const Tensor& t, const char* kind) {
    return json{{"name", name}, {"shape", t.shape}, {"kind", kind}};
}

}  // namespace

void save_checkpoint(const std::string& path, const StandModel& model, const nn::Adam& opt,
                     const std::string& config_hash, long step,
                     const std::map<std::string, std::string>& config_kv) {
    json manifest;
    manifest["version"] = 1;
    manifest["config_hash"] = config_hash;
    manifest["step"] = step;
    manifest["config"] = config_kv;
    manifest["adam_steps"] = opt.step_count;
    json dir = json::array();
    std::vector<const std::vector<float>*> payloads;
    for (const auto& [name, p] : model.ps.params) {
        dir.push_back(tensor_entry(name, p->value, "param"));
        payloads.push_back(&p->value.data);
    }
    for (const auto& [name, b] : model.ps.buffers) {
        dir.push_back(tensor_entry(name, *b, "buffer"));
        payloads.push_back(&b->data);
    }
    for (const auto& [name, mv] : opt.state) {
        dir.push_back(tensor_entry(name, mv.first, "adam_m"));
        payloads.push_back(&mv.first.data);
        dir.push_back(tensor_entry(name, mv.second, "adam_v"));
        payloads.push_back(&mv.second.data);
    }
    manifest["tensors"] = std::move(dir);
    std::string mtext = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("checkpoint: cannot open " + path + " for writing");
    out.write(kMagic, 4);
    std::uint32_t version = 1;
    std::uint64_t mlen = mtext.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    for (const auto* p : payloads) write_f32(out, *p);
    if (!out) throw FormatError("checkpoint: short write to " + path);
}

static json read_manifest(std::ifstream& in, const std::string& path) {
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t mlen = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("checkpoint: " + path + " is not a checkpoint file");
    if (version != 1)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    std::string mtext(mlen, '\0');
    in.read(mtext.data(), static_cast<std::streamsize>(mlen));
    if (!in) throw FormatError("checkpoint: truncated manifest in " + path);
    try {
        return json::parse(mtext);
    } catch (const json::exception& e) {
        throw FormatError("checkpoint: bad manifest in " + path + ": " + e.what());
    }
}

void load_checkpoint(const std::string& path, StandModel& model, nn::Adam& opt,
                     std::string* config_hash, long* step) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("checkpoint: cannot open " + path);
    json manifest = read_manifest(in, path);
    if (config_hash) *config_hash = manifest.value("config_hash", "");
    if (step) *step = manifest.value("step", 0L);
    opt.step_count = manifest.value("adam_steps", 0L);
    opt.state.clear();

    for (const json& entry : manifest.at("tensors")) {
        std::string name = entry.at("name");
        std::string kind = entry.at("kind");
        std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!in) throw FormatError("checkpoint: truncated payload for " + name);
        if (kind == "param") {
            ag::Var p = model.ps.find(name);
            if (!p) throw FormatError("checkpoint: parameter " + name + " not in model");
            if (!p->value.same_shape(t))
                throw FormatError("checkpoint: shape mismatch for " + name);
            p->value = std::move(t);
        } else if (kind == "buffer") {
            bool found = false;
            for (auto& [bname, b] : model.ps.buffers)
                if (bname == name) {
                    if (!b->same_shape(t)) throw FormatError("checkpoint: shape mismatch for " + name);
                    *b = std::move(t);
                    found = true;
                    break;
                }
            if (!found) throw FormatError("checkpoint: buffer " + name + " not in model");
        } else if (kind == "adam_m") {
            opt.state[name].first = std::move(t);
        } else if (kind == "adam_v") {
            opt.state[name].second = std::move(t);
        } else {
            throw FormatError("checkpoint: unknown tensor kind " + kind);
        }
    }
}

std::map<std::string, std::string> checkpoint_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("checkpoint: cannot open " + path);
    json manifest = read_manifest(in, path);
    std::map<std::string, std::string> kv;
    if (manifest.contains("config"))
        kv = manifest.at("config").get<std::map<std::string, std::string>>();
    return kv;
}

std::vector<std::string> checkpoint_param_names(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("checkpoint: cannot open " + path);
    json manifest = read_manifest(in, path);
    std::vector<std::string> names;
    for (const json& entry : manifest.at("tensors"))
        if (entry.at("kind") == "param") names.push_back(entry.at("name"));
    return names;
}

}  // namespace stand
