#pragma once

#include <set>
#include <string>
#include <vector>

namespace stand::metrics {

using Tokens = std::vector<std::string>;

// BLEU-N: modified n-gram precision, geometric mean over orders 1..N,
// closest-reference brevity penalty.
double bleu_n(const Tokens& hyp, const std::vector<Tokens>& refs, int N);
double corpus_bleu_n(const std::vector<Tokens>& hyps,
                     const std::vector<std::vector<Tokens>>& refs, int N);

// ROUGE-L: LCS F-measure (beta^2 = 1.2), max over references.
double rouge_l(const Tokens& hyp, const std::vector<Tokens>& refs);

// CIDEr-D over a whole corpus; returns per-item scores (mean is the corpus
// value). TF-IDF n-gram cosine, n=1..4, clipped counts, length Gaussian
// sigma=6, x10 scaling.
std::vector<double> cider_d(const std::vector<Tokens>& hyps,
                            const std::vector<std::vector<Tokens>>& refs);

// Simplified METEOR: exact unigram matching only (no synonym or paraphrase
// resources, so values are not comparable to reference implementations).
double meteor_simple(const Tokens& hyp, const std::vector<Tokens>& refs);

struct EvalRecord {
    int id = 0;
    Tokens hyp;
    std::vector<Tokens> refs;
    std::set<std::string> pred_entities;
    std::set<std::string> truth_entities;
    bool small_scale = false;
    bool no_change = false;
};

struct AmbiguityReport {
    long tp = 0, fp = 0, fn = 0, tn = 0;
    double fpr = 0, precision = 0, recall = 0, f1 = 0;
    double small_scale_bleu4 = 0, small_scale_meteor = 0;
};

// Keyword extraction of category entities from a caption.
std::set<std::string> extract_entities(const Tokens& caption,
                                       const std::vector<std::string>& categories);

// Micro-averaged contingency over (sample, category) pairs.
AmbiguityReport ambiguity_eval(const std::vector<EvalRecord>& records,
                               const std::vector<std::string>& categories);

}  // namespace stand::metrics
