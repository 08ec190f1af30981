#include "stand/eval.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "stand/errors.hpp"

namespace stand {

using nlohmann::json;

EvalReport evaluate(StandModel& model, const data::Dataset& ds, const std::vector<int>& indices,
                    int beam_width) {
    if (indices.empty()) throw InputError("eval: empty index list");
    EvalReport rep;
    std::vector<metrics::Tokens> hyps;
    std::vector<std::vector<metrics::Tokens>> refs;
    std::vector<metrics::EvalRecord> records;
    long exact = 0;

    for (int idx : indices) {
        const data::Sample& s = ds.samples.at(idx);
        std::string caption = model.generate_caption(s, ds.vocab, beam_width);
        rep.hypotheses.push_back(caption);
        metrics::Tokens hyp = data::tokenize(caption);
        std::vector<metrics::Tokens> sample_refs;
        bool matched = false;
        for (const std::string& r : s.captions) {
            sample_refs.push_back(data::tokenize(r));
            if (data::tokenize(r) == hyp) matched = true;
        }
        if (matched) ++exact;
        hyps.push_back(hyp);
        refs.push_back(sample_refs);

        metrics::EvalRecord rec;
        rec.id = idx;
        rec.hyp = hyp;
        rec.refs = sample_refs;
        rec.pred_entities = metrics::extract_entities(hyp, ds.spec.categories);
        for (size_t c = 0; c < ds.spec.categories.size(); ++c)
            if (c < s.change_labels.size() && s.change_labels[c])
                rec.truth_entities.insert(ds.spec.categories[c]);
        rec.small_scale = s.small_scale;
        rec.no_change = s.is_no_change;
        records.push_back(std::move(rec));

        if (model.cfg.enable_sca) {
            std::vector<int> pred = model.predicted_change_labels(s);
            for (size_t c = 0; c < pred.size(); ++c) {
                bool p = pred[c] != 0;
                bool t = c < s.change_labels.size() && s.change_labels[c] != 0;
                if (p && t) ++rep.cls_tp;
                else if (p && !t) ++rep.cls_fp;
                else if (!p && t) ++rep.cls_fn;
                else ++rep.cls_tn;
            }
        }
    }

    rep.exact_match = static_cast<double>(exact) / indices.size();
    rep.bleu1 = metrics::corpus_bleu_n(hyps, refs, 1);
    rep.bleu2 = metrics::corpus_bleu_n(hyps, refs, 2);
    rep.bleu3 = metrics::corpus_bleu_n(hyps, refs, 3);
    rep.bleu4 = metrics::corpus_bleu_n(hyps, refs, 4);
    double rl = 0, mt = 0;
    for (size_t i = 0; i < hyps.size(); ++i) {
        rl += metrics::rouge_l(hyps[i], refs[i]);
        mt += metrics::meteor_simple(hyps[i], refs[i]);
    }
    rep.rouge_l = rl / hyps.size();
    rep.meteor = mt / hyps.size();
    if (hyps.size() >= 2) {
        std::vector<double> cd = metrics::cider_d(hyps, refs);
        double sum = 0;
        for (double v : cd) sum += v;
        rep.cider_d = sum / cd.size();
    }
    rep.ambiguity = metrics::ambiguity_eval(records, ds.spec.categories);

    if (model.cfg.enable_sca) {
        double p = rep.cls_tp + rep.cls_fp == 0
                       ? 1.0
                       : static_cast<double>(rep.cls_tp) / (rep.cls_tp + rep.cls_fp);
        double r = rep.cls_tp + rep.cls_fn == 0
                       ? 1.0
                       : static_cast<double>(rep.cls_tp) / (rep.cls_tp + rep.cls_fn);
        rep.cls_f1 = p + r == 0 ? 0.0 : 2 * p * r / (p + r);
    }
    return rep;
}

void write_report(const EvalReport& rep, const std::string& path, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["metrics"] = {{"bleu1", rep.bleu1},     {"bleu2", rep.bleu2},
                    {"bleu3", rep.bleu3},     {"bleu4", rep.bleu4},
                    {"rouge_l", rep.rouge_l}, {"cider_d", rep.cider_d},
                    {"meteor", rep.meteor}};
    j["exact_match"] = rep.exact_match;
    j["ambiguity"] = {{"fpr", rep.ambiguity.fpr},
                      {"precision", rep.ambiguity.precision},
                      {"recall", rep.ambiguity.recall},
                      {"f1", rep.ambiguity.f1},
                      {"small_scale_bleu4", rep.ambiguity.small_scale_bleu4},
                      {"small_scale_meteor", rep.ambiguity.small_scale_meteor}};
    j["classification"] = {{"tp", rep.cls_tp}, {"fp", rep.cls_fp}, {"fn", rep.cls_fn},
                           {"tn", rep.cls_tn}, {"f1", rep.cls_f1}};
    std::ofstream out(path);
    if (!out) throw FormatError("eval: cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace stand
