#pragma once

#include <string>
#include <vector>

#include "stand/metrics.hpp"
#include "stand/model.hpp"

namespace stand {

struct EvalReport {
    std::vector<std::string> hypotheses;  // generated caption per sample
    double bleu1 = 0, bleu2 = 0, bleu3 = 0, bleu4 = 0;
    double rouge_l = 0, cider_d = 0, meteor = 0;
    double exact_match = 0;  // fraction matching any reference verbatim
    metrics::AmbiguityReport ambiguity;
    // micro change-classification counts over (sample, category)
    long cls_tp = 0, cls_fp = 0, cls_fn = 0, cls_tn = 0;
    double cls_f1 = 0;
};

EvalReport evaluate(StandModel& model, const data::Dataset& ds,
                    const std::vector<int>& indices, int beam_width = 1);

// Serialized as report.json with the config hash embedded.
void write_report(const EvalReport& rep, const std::string& path, const std::string& config_hash);

}  // namespace stand
