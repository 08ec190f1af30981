// stand: synthetic bi-temporal change captioning — dataset generation,
// training, evaluation, and self-verification in one binary.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "stand/data.hpp"
#include "stand/errors.hpp"
#include "stand/eval.hpp"
#include "stand/runconfig.hpp"
#include "stand/verify.hpp"

namespace fs = std::filesystem;
using namespace stand;
using nlohmann::json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value
    bool json_output = false;
};

config::KeyValues resolve_config(const CommonOpts& opts) {
    config::KeyValues kv;
    if (!opts.config_path.empty()) kv = config::load_file(opts.config_path);
    for (const std::string& o : opts.overrides) {
        config::KeyValues one = config::parse(o);
        for (auto& [k, v] : one) kv[k] = v;
    }
    apply_seed_env(kv);
    return kv;
}

int run_gen(const CommonOpts& opts, long seed_flag, int count, const std::string& out_dir) {
    config::KeyValues kv = resolve_config(opts);
    if (seed_flag >= 0 && !std::getenv("STAND_SEED")) kv["gen.seed"] = std::to_string(seed_flag);
    data::SceneSpec spec = scene_spec_from(kv);
    if (count < 1) throw ConfigError("gen: --count must be >= 1");
    std::vector<data::Sample> samples = data::generate_corpus(spec, count);
    fs::create_directories(out_dir);
    data::write_dataset(samples, spec, out_dir);
    if (opts.json_output) {
        json j{{"samples", count}, {"out", out_dir}, {"config_hash", config::hash_hex(kv)}};
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "wrote " << count << " samples to " << out_dir << "\n";
    }
    return 0;
}

int run_train(const CommonOpts& opts, const std::string& data_dir, const std::string& out_dir,
              const std::string& ablation) {
    config::KeyValues kv = resolve_config(opts);
    if (!ablation.empty()) kv["model.ablation"] = ablation;
    if (!fs::exists(data_dir)) throw ConfigError("train: data directory not found: " + data_dir);
    data::Dataset ds = data::read_dataset(data_dir);
    config::KeyValues eff = effective_config(kv, ds);
    std::string hash = config::hash_hex(eff);

    ModelConfig mc = model_config_from(kv, ds);
    TrainConfig tc = train_config_from(kv);
    fs::create_directories(out_dir);
    tc.log_path = (fs::path(out_dir) / "loss_log.jsonl").string();

    StandModel model(mc);
    nn::Adam opt;
    std::vector<StepRecord> log = train(model, ds, tc, &opt);
    save_checkpoint((fs::path(out_dir) / "checkpoint.stck").string(), model, opt, hash,
                    tc.steps, eff);
    if (opts.json_output) {
        json j{{"steps", tc.steps},
               {"final_total", log.empty() ? 0.0f : log.back().total},
               {"config_hash", hash},
               {"out", out_dir}};
        std::cout << j.dump() << "\n";
    } else {
        std::cout << "trained " << tc.steps << " steps; final total loss "
                  << (log.empty() ? 0.0f : log.back().total) << "; config " << hash << "\n";
    }
    return 0;
}

int run_eval(const CommonOpts& opts, const std::string& ckpt_path, const std::string& data_dir,
             const std::string& out_dir, bool dump_attention) {
    config::KeyValues kvcli = resolve_config(opts);
    if (!fs::exists(ckpt_path)) throw ConfigError("eval: checkpoint not found: " + ckpt_path);
    if (!fs::exists(data_dir)) throw ConfigError("eval: data directory not found: " + data_dir);
    data::Dataset ds = data::read_dataset(data_dir);

    config::KeyValues kv = checkpoint_config(ckpt_path);
    for (auto& [k, v] : kvcli) kv[k] = v;  // flags override stored config
    long stored_vocab = config::get_int(kv, "model.vocab_size", -1);
    if (stored_vocab >= 0 && stored_vocab != ds.vocab.size())
        throw ConfigError("eval: checkpoint vocabulary size (" + std::to_string(stored_vocab) +
                          ") does not match dataset vocabulary (" +
                          std::to_string(ds.vocab.size()) + ")");

    ModelConfig mc = model_config_from(kv, ds);
    StandModel model(mc);
    nn::Adam opt;
    std::string hash;
    load_checkpoint(ckpt_path, model, opt, &hash);

    int beam = static_cast<int>(config::get_int(kv, "decoder.beam", 1));
    std::vector<int> indices(ds.samples.size());
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
    EvalReport rep = evaluate(model, ds, indices, beam);
    fs::create_directories(out_dir);
    write_report(rep, (fs::path(out_dir) / "report.json").string(), hash);

    std::ofstream preds((fs::path(out_dir) / "predictions.jsonl").string());
    for (size_t i = 0; i < rep.hypotheses.size(); ++i)
        preds << json{{"id", indices[i]}, {"caption", rep.hypotheses[i]}}.dump() << "\n";

    if (dump_attention) {
        fs::path adir = fs::path(out_dir) / "attention";
        fs::create_directories(adir);
        SampleForward f = model.forward(ds.samples[0], ds.vocab, 0, false, true);
        for (size_t i = 0; i < f.attention.size(); ++i)
            data::write_tensor_file(f.attention[i],
                                    (adir / ("map_" + std::to_string(i) + ".ten")).string());
    }
    if (opts.json_output) {
        json j{{"bleu4", rep.bleu4}, {"exact_match", rep.exact_match}, {"out", out_dir}};
        std::cout << j.dump() << "\n";
    } else {
        std::printf("BLEU-4 %.4f  ROUGE-L %.4f  CIDEr-D %.4f  exact %.1f%%\n", rep.bleu4,
                    rep.rouge_l, rep.cider_d, 100.0 * rep.exact_match);
    }
    return 0;
}

int run_verify(const CommonOpts& opts) {
    config::KeyValues kv = resolve_config(opts);
    std::uint64_t seed = static_cast<std::uint64_t>(config::get_int(kv, "train.seed", 7));
    std::vector<verify::CheckResult> results = verify::run_all(seed);
    if (opts.json_output) {
        json j = json::array();
        for (const auto& r : results)
            j.push_back({{"name", r.name}, {"pass", r.pass}, {"detail", r.detail}});
        std::cout << j.dump(2) << "\n";
    } else {
        for (const auto& r : results)
            std::printf("[%s] %-28s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(),
                        r.detail.c_str());
    }
    return verify::all_passed(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic remote-sensing change captioning"};
    app.require_subcommand(1);
    CommonOpts opts;
    app.add_option("--config", opts.config_path, "flat key=value config file");
    app.add_option("--set", opts.overrides, "config override key=value (repeatable)");
    app.add_flag("--json", opts.json_output, "machine-readable output");

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->fallthrough();
    long gen_seed = -1;
    int gen_count = 0;
    std::string gen_out;
    gen->add_option("--seed", gen_seed, "generation seed");
    gen->add_option("--count", gen_count, "number of samples")->required();
    gen->add_option("--out", gen_out, "output directory")->required();

    auto* tr = app.add_subcommand("train", "train a model");
    tr->fallthrough();
    std::string tr_data, tr_out, tr_ablation;
    tr->add_option("--data", tr_data, "dataset directory")->required();
    tr->add_option("--out", tr_out, "output directory")->required();
    tr->add_option("--ablation", tr_ablation, "preset b0|b1|b2|b3");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->fallthrough();
    std::string ev_ckpt, ev_data, ev_out;
    bool ev_dump = false;
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_option("--out", ev_out, "output directory")->required();
    ev->add_flag("--dump-attention", ev_dump, "write attention maps as tensor files");

    auto* vf = app.add_subcommand("verify", "run the property suite");
    vf->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return run_gen(opts, gen_seed, gen_count, gen_out);
        if (tr->parsed()) return run_train(opts, tr_data, tr_out, tr_ablation);
        if (ev->parsed()) return run_eval(opts, ev_ckpt, ev_data, ev_out, ev_dump);
        if (vf->parsed()) return run_verify(opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
