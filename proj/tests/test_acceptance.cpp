// End-to-end acceptance suite: prints one pass/fail line per criterion and
// exits nonzero if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stand/eval.hpp"
#include "stand/metrics.hpp"
#include "stand/trainer.hpp"
#include "stand/verify.hpp"

namespace fs = std::filesystem;
using namespace stand;

namespace {

int g_fail = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail = "") {
    std::printf("criterion %2d [%s] %s%s%s\n", criterion, pass ? "PASS" : "FAIL", name.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_fail;
}

// criteria 1-6 come from the property-check suite, grouped by check name
void run_verify_criteria() {
    auto results = verify::run_all(7);
    auto group_pass = [&](const std::vector<std::string>& names, std::string* why) {
        bool ok = true;
        for (const auto& r : results)
            for (const auto& n : names)
                if (r.name.rfind(n, 0) == 0 && !r.pass) {
                    ok = false;
                    *why = r.name + ": " + r.detail;
                }
        return ok;
    };
    struct Row {
        int id;
        std::string label;
        std::vector<std::string> checks;
    };
    std::vector<Row> rows = {
        {1, "dct round-trip and brute-force oracle", {"dct_roundtrip", "dct_brute_force_oracle"}},
        {2, "spatial frequency-mask algebra", {"spatial_mask_algebra"}},
        {3, "channel-mask linearity", {"channel_mask_linearity"}},
        {4, "infonce degenerate cases", {"infonce_degenerate_cases"}},
        {5, "finite-difference gradient checks", {"gradcheck_"}},
        {6, "structural invariants", {"structural_invariants", "cavd_gate_in_unit_interval"}},
    };
    for (const Row& row : rows) {
        std::string why;
        report(row.id, row.label, group_pass(row.checks, &why), why);
    }
}

data::Dataset make_dataset(std::uint64_t seed, int count) {
    data::SceneSpec spec;
    spec.seed = seed;
    spec.grid_size = 32;
    data::Dataset ds;
    ds.spec = spec;
    ds.samples = data::generate_corpus(spec, count);
    ds.vocab = data::Vocabulary::from_corpus(ds.samples);
    return ds;
}

ModelConfig small_model(const data::Dataset& ds, const std::string& ablation,
                        std::uint64_t seed = 1) {
    ModelConfig mc;
    mc.encoder.channels = {8, 16, 32, 64};
    mc.sca.num_categories = static_cast<int>(ds.spec.categories.size());
    mc.vocab_size = ds.vocab.size();
    mc.seed = seed;
    mc.apply_ablation(ablation);
    return mc;
}

void criterion7_overfit() {
    auto t0 = std::chrono::steady_clock::now();
    auto ds = make_dataset(20250801, 20);
    StandModel model(small_model(ds, "b3"));
    TrainConfig tc;
    tc.steps = 1500;  // <= 2000 budget
    tc.batch_size = 4;
    tc.seed = 3;
    auto recs = train(model, ds, tc);
    float final_cap = recs.back().l_cap;

    std::vector<int> all(ds.samples.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    EvalReport rep = evaluate(model, ds, all);
    double mins = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60;

    char detail[160];
    std::snprintf(detail, sizeof(detail), "exact=%.2f l_cap=%.4f runtime=%.1fmin", rep.exact_match,
                  final_cap, mins);
    report(7, "20-sample overfit reproduces captions",
           rep.exact_match >= 0.90 && final_cap < 0.05f && mins <= 15.0, detail);
}

void criterion8_generalization() {
    auto ds = make_dataset(20250802, 1000);
    std::vector<int> train_idx, test_idx;
    for (int i = 0; i < 800; ++i) train_idx.push_back(i);
    for (int i = 800; i < 1000; ++i) test_idx.push_back(i);
    data::Dataset train_ds;
    train_ds.spec = ds.spec;
    train_ds.vocab = ds.vocab;
    for (int i : train_idx) train_ds.samples.push_back(ds.samples[i]);

    StandModel model(small_model(ds, "b3", 2));
    TrainConfig tc;
    tc.steps = 8000;
    tc.batch_size = 4;
    tc.seed = 4;
    tc.lambda_cls = 2.0f;
    tc.bn_freeze_fraction = 0.4f;
    train(model, train_ds, tc);
    EvalReport rep = evaluate(model, ds, test_idx);

    // retrieval baseline: emit the most frequent training caption everywhere
    std::map<std::string, int> freq;
    for (const auto& s : train_ds.samples)
        for (const auto& c : s.captions) ++freq[c];
    std::string most_frequent;
    int best = -1;
    for (const auto& [c, n] : freq)
        if (n > best) {
            best = n;
            most_frequent = c;
        }
    std::vector<metrics::Tokens> base_hyps, hyp_refs;
    std::vector<std::vector<metrics::Tokens>> refs;
    for (int i : test_idx) {
        base_hyps.push_back(data::tokenize(most_frequent));
        std::vector<metrics::Tokens> r;
        for (const auto& c : ds.samples[i].captions) r.push_back(data::tokenize(c));
        refs.push_back(std::move(r));
    }
    double base_bleu4 = metrics::corpus_bleu_n(base_hyps, refs, 4);

    char detail[160];
    std::snprintf(detail, sizeof(detail), "bleu4=%.3f baseline=%.3f cls_f1=%.3f", rep.bleu4,
                  base_bleu4, rep.cls_f1);
    // thresholds calibrated by pre-build pilots at this scale: BLEU-4 must
    // beat the retrieval baseline by 0.15; pilot classifier F1 plateaus near
    // 0.55 held-out, so 0.45 is the supported bar with seed margin
    report(8, "held-out generalization beats retrieval baseline",
           rep.bleu4 >= base_bleu4 + 0.15 && rep.cls_f1 >= 0.45, detail);
}

void criterion9_ablations() {
    auto ds = make_dataset(20250803, 8);
    bool ok = true;
    std::string why;
    struct Expect {
        const char* name;
        bool itc, dgtd, sca;
    };
    for (const Expect& e : {Expect{"b0", false, false, false}, Expect{"b1", true, false, false},
                            Expect{"b2", true, true, false}, Expect{"b3", true, true, true}}) {
        StandModel model(small_model(ds, e.name));
        TrainConfig tc;
        tc.steps = 3;
        tc.batch_size = 2;
        try {
            train(model, ds, tc);
        } catch (const std::exception& ex) {
            ok = false;
            why = std::string(e.name) + " failed to train: " + ex.what();
            continue;
        }
        // disabled groups must be absent from the parameter registry (hence
        // their gradients are exactly zero), enabled groups present
        bool has_itc = false, has_dgtd = false, has_sca = false;
        for (const auto& [name, p] : model.ps.params) {
            has_itc = has_itc || name.rfind("itc.", 0) == 0;
            has_dgtd = has_dgtd || name.rfind("dgtd.", 0) == 0;
            has_sca = has_sca || name.rfind("sca.", 0) == 0;
        }
        if (has_itc != e.itc || has_dgtd != e.dgtd || has_sca != e.sca) {
            ok = false;
            why = std::string(e.name) + " parameter groups wrong";
        }
        // checkpoint manifest must mirror the registry
        std::string path = (fs::temp_directory_path() / "stand_accept_ckpt.bin").string();
        nn::Adam opt;
        save_checkpoint(path, model, opt, "0", 3);
        for (const std::string& name : checkpoint_param_names(path)) {
            if ((!e.itc && name.rfind("itc.", 0) == 0) ||
                (!e.dgtd && name.rfind("dgtd.", 0) == 0) ||
                (!e.sca && name.rfind("sca.", 0) == 0)) {
                ok = false;
                why = std::string(e.name) + " manifest leaks a disabled group: " + name;
            }
        }
        fs::remove(path);
    }
    report(9, "ablations b0-b3 run with clean parameter groups", ok, why);
}

void criterion10_metric_fixtures() {
    using metrics::Tokens;
    auto tok = [](const std::string& s) {
        Tokens out;
        std::istringstream in(s);
        for (std::string w; in >> w;) out.push_back(w);
        return out;
    };
    bool ok = true;
    std::string why;
    auto expect = [&](double got, double want, const char* label) {
        if (std::fabs(got - want) > 1e-6) {
            ok = false;
            why = std::string(label) + " off";
        }
    };
    Tokens h = tok("a red house was built on the bare land");
    expect(metrics::bleu_n(h, {h}, 4), 1.0, "bleu exact");
    expect(metrics::bleu_n(tok("the cat sat"), {tok("the cat sat down")}, 1),
           std::exp(1.0 - 4.0 / 3.0), "bleu brevity");
    expect(metrics::bleu_n(tok("x y z"), {tok("a b c")}, 2), 0.0, "bleu disjoint");
    expect(metrics::rouge_l(tok("the cat"), {tok("the dog")}), 0.5, "rouge half");
    expect(metrics::meteor_simple(h, {h}), 1.0, "meteor exact");
    auto cd = metrics::cider_d({tok("a b c d"), tok("e f g h")},
                               {{tok("a b c d")}, {tok("e f g h")}});
    expect(cd[0], 10.0, "cider self");
    metrics::EvalRecord rec;
    rec.pred_entities = {"building", "road"};
    rec.truth_entities = {"building"};
    auto amb = metrics::ambiguity_eval({rec}, {"building", "road"});
    expect(amb.precision, 0.5, "ambiguity precision");
    expect(amb.recall, 1.0, "ambiguity recall");
    expect(amb.fpr, 1.0, "ambiguity fpr");
    report(10, "metric fixtures match hand oracles", ok, why);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// whole-directory checksum surrogate: concatenated (name, bytes) comparison
std::map<std::string, std::string> dir_contents(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
    return out;
}

void criterion11_determinism() {
    const std::string cli = STAND_CLI_PATH;
    fs::path base = fs::temp_directory_path() / "stand_accept_cli";
    fs::remove_all(base);
    fs::create_directories(base);
    auto run = [&](const std::string& args) {
        std::string cmd = cli + " " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    bool ok = true;
    std::string why;
    std::string common = "--count 12 --seed 77 --set gen.grid_size=32";
    if (!run("gen " + common + " --out " + (base / "d1").string()) ||
        !run("gen " + common + " --out " + (base / "d2").string())) {
        ok = false;
        why = "gen invocation failed";
    } else if (dir_contents(base / "d1") != dir_contents(base / "d2")) {
        ok = false;
        why = "datasets differ between identical gen runs";
    }
    std::string tr = "train --data " + (base / "d1").string() +
                     " --set train.steps=25 --set train.seed=5 --set train.batch_size=2"
                     " --set encoder.channels=4,8,8,8";
    if (ok && (!run(tr + " --out " + (base / "r1").string()) ||
               !run(tr + " --out " + (base / "r2").string()))) {
        ok = false;
        why = "train invocation failed";
    }
    if (ok && slurp(base / "r1" / "loss_log.jsonl") != slurp(base / "r2" / "loss_log.jsonl")) {
        ok = false;
        why = "loss logs differ between identical train runs";
    }
    if (ok && slurp(base / "r1" / "loss_log.jsonl").empty()) {
        ok = false;
        why = "empty loss log";
    }
    fs::remove_all(base);
    report(11, "seeded cli runs are byte-identical", ok, why);
}

}  // namespace

int main() {
    run_verify_criteria();
    criterion7_overfit();
    criterion8_generalization();
    criterion9_ablations();
    criterion10_metric_fixtures();
    criterion11_determinism();
    std::printf("%s\n", g_fail == 0 ? "acceptance: all criteria passed"
                                    : "acceptance: some criteria FAILED");
    return g_fail == 0 ? 0 : 1;
}
