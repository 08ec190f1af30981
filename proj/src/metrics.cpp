#include "stand/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "stand/errors.hpp"

namespace stand::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string>, long>;

NgramCounts count_ngrams(const Tokens& s, int n) {
    NgramCounts out;
    for (int i = 0; i + n <= static_cast<int>(s.size()); ++i)
        ++out[std::vector<std::string>(s.begin() + i, s.begin() + i + n)];
    return out;
}

// Per-order clipped match count and hypothesis n-gram total.
std::pair<long, long> clipped_matches(const Tokens& hyp, const std::vector<Tokens>& refs, int n) {
    NgramCounts hc = count_ngrams(hyp, n);
    long total = 0, matched = 0;
    for (const auto& [ng, c] : hc) total += c;
    for (const auto& [ng, c] : hc) {
        long best = 0;
        for (const Tokens& r : refs) {
            NgramCounts rc = count_ngrams(r, n);
            auto it = rc.find(ng);
            if (it != rc.end()) best = std::max(best, it->second);
        }
        matched += std::min(c, best);
    }
    return {matched, total};
}

long closest_ref_len(size_t hyp_len, const std::vector<Tokens>& refs) {
    long best = static_cast<long>(refs.front().size());
    for (const Tokens& r : refs) {
        long rl = static_cast<long>(r.size());
        long dh = std::labs(rl - static_cast<long>(hyp_len));
        long db = std::labs(best - static_cast<long>(hyp_len));
        if (dh < db || (dh == db && rl < best)) best = rl;
    }
    return best;
}

double bleu_from_counts(const std::vector<long>& matched, const std::vector<long>& total,
                        long hyp_len, long ref_len) {
    double log_prec = 0.0;
    int active = 0;
    for (size_t n = 0; n < matched.size(); ++n) {
        if (total[n] == 0) continue;  // hypothesis too short for this order
        if (matched[n] == 0) return 0.0;
        log_prec += std::log(static_cast<double>(matched[n]) / total[n]);
        ++active;
    }
    if (active == 0 || hyp_len == 0) return 0.0;
    double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / hyp_len);
    return bp * std::exp(log_prec / active);
}

}  // namespace

double bleu_n(const Tokens& hyp, const std::vector<Tokens>& refs, int N) {
    if (N < 1 || N > 4) throw ConfigError("bleu_n: N must be in 1..4");
    if (refs.empty()) throw InputError("bleu_n: need at least one reference");
    if (hyp.empty()) return 0.0;
    std::vector<long> matched(N), total(N);
    for (int n = 1; n <= N; ++n)
        std::tie(matched[n - 1], total[n - 1]) = clipped_matches(hyp, refs, n);
    return bleu_from_counts(matched, total, static_cast<long>(hyp.size()),
                            closest_ref_len(hyp.size(), refs));
}

double corpus_bleu_n(const std::vector<Tokens>& hyps,
                     const std::vector<std::vector<Tokens>>& refs, int N) {
    if (hyps.size() != refs.size()) throw InputError("corpus_bleu_n: hyp/ref count mismatch");
    if (hyps.empty()) throw InputError("corpus_bleu_n: empty corpus");
    std::vector<long> matched(N, 0), total(N, 0);
    long hyp_len = 0, ref_len = 0;
    for (size_t i = 0; i < hyps.size(); ++i) {
        if (refs[i].empty()) throw InputError("corpus_bleu_n: need at least one reference");
        for (int n = 1; n <= N; ++n) {
            auto [m, t] = clipped_matches(hyps[i], refs[i], n);
            matched[n - 1] += m;
            total[n - 1] += t;
        }
        hyp_len += static_cast<long>(hyps[i].size());
        ref_len += closest_ref_len(hyps[i].size(), refs[i]);
    }
    return bleu_from_counts(matched, total, hyp_len, ref_len);
}

double rouge_l(const Tokens& hyp, const std::vector<Tokens>& refs) {
    if (refs.empty()) throw InputError("rouge_l: need at least one reference");
    if (hyp.empty()) return 0.0;
    const double beta_sq = 1.2;
    double best = 0.0;
    for (const Tokens& ref : refs) {
        if (ref.empty()) continue;
        const size_t m = hyp.size(), n = ref.size();
        std::vector<std::vector<int>> dp(m + 1, std::vector<int>(n + 1, 0));
        for (size_t i = 1; i <= m; ++i)
            for (size_t j = 1; j <= n; ++j)
                dp[i][j] = hyp[i - 1] == ref[j - 1] ? dp[i - 1][j - 1] + 1
                                                    : std::max(dp[i - 1][j], dp[i][j - 1]);
        double lcs = dp[m][n];
        if (lcs == 0) continue;
        double p = lcs / m, r = lcs / n;
        best = std::max(best, (1.0 + beta_sq) * p * r / (r + beta_sq * p));
    }
    return best;
}

std::vector<double> cider_d(const std::vector<Tokens>& hyps,
                            const std::vector<std::vector<Tokens>>& refs) {
    if (hyps.size() != refs.size()) throw InputError("cider_d: hyp/ref count mismatch");
    if (hyps.size() < 2) throw ConfigError("cider_d: corpus must have at least 2 items");
    const int kMaxN = 4;
    const double sigma = 6.0;
    const double log_corpus = std::log(static_cast<double>(hyps.size()));

    // document frequency: number of items whose reference set contains the n-gram
    std::vector<std::map<std::vector<std::string>, long>> df(kMaxN);
    for (const auto& rset : refs) {
        for (int n = 1; n <= kMaxN; ++n) {
            std::map<std::vector<std::string>, bool> seen;
            for (const Tokens& r : rset)
                for (const auto& [ng, c] : count_ngrams(r, n)) seen[ng] = true;
            for (const auto& [ng, _] : seen) ++df[n - 1][ng];
        }
    }
    auto idf = [&](int n, const std::vector<std::string>& ng) {
        auto it = df[n - 1].find(ng);
        double d = it == df[n - 1].end() ? 1.0 : std::max(1.0, static_cast<double>(it->second));
        return log_corpus - std::log(d);
    };
    auto tfidf_vec = [&](const Tokens& s, int n) {
        std::map<std::vector<std::string>, double> v;
        for (const auto& [ng, c] : count_ngrams(s, n)) v[ng] = c * idf(n, ng);
        return v;
    };
    auto norm = [](const std::map<std::vector<std::string>, double>& v) {
        double s = 0;
        for (const auto& [_, x] : v) s += x * x;
        return std::sqrt(s);
    };

    std::vector<double> scores;
    scores.reserve(hyps.size());
    for (size_t i = 0; i < hyps.size(); ++i) {
        if (refs[i].empty()) throw InputError("cider_d: need at least one reference");
        double item = 0.0;
        for (int n = 1; n <= kMaxN; ++n) {
            auto hv = tfidf_vec(hyps[i], n);
            double hn = norm(hv);
            double order_score = 0.0;
            for (const Tokens& r : refs[i]) {
                auto rv = tfidf_vec(r, n);
                double rn = norm(rv);
                double dot = 0.0;
                for (const auto& [ng, hx] : hv) {
                    auto it = rv.find(ng);
                    if (it != rv.end()) dot += std::min(hx, it->second) * it->second;
                }
                double sim = (hn > 0 && rn > 0) ? dot / (hn * rn) : 0.0;
                double delta = static_cast<double>(hyps[i].size()) - static_cast<double>(r.size());
                order_score += sim * std::exp(-delta * delta / (2 * sigma * sigma));
            }
            item += order_score / refs[i].size();
        }
        scores.push_back(10.0 * item / kMaxN);
    }
    return scores;
}

double meteor_simple(const Tokens& hyp, const std::vector<Tokens>& refs) {
    if (refs.empty()) throw InputError("meteor_simple: need at least one reference");
    if (hyp.empty()) return 0.0;
    double best = 0.0;
    for (const Tokens& ref : refs) {
        if (ref.empty()) continue;
        // greedy left-to-right unigram alignment
        std::vector<int> align(hyp.size(), -1);
        std::vector<bool> used(ref.size(), false);
        for (size_t i = 0; i < hyp.size(); ++i)
            for (size_t j = 0; j < ref.size(); ++j)
                if (!used[j] && hyp[i] == ref[j]) {
                    align[i] = static_cast<int>(j);
                    used[j] = true;
                    break;
                }
        long m = 0;
        for (int a : align)
            if (a >= 0) ++m;
        if (m == 0) continue;
        long chunks = 0;
        int prev = -2;
        for (int a : align) {
            if (a < 0) {
                prev = -2;
                continue;
            }
            if (a != prev + 1) ++chunks;
            prev = a;
        }
        double p = static_cast<double>(m) / hyp.size();
        double r = static_cast<double>(m) / ref.size();
        double fmean = 10.0 * p * r / (r + 9.0 * p);
        // single contiguous chunk carries no fragmentation penalty (so an
        // exact match scores 1.0)
        double penalty = chunks <= 1 ? 0.0
                                     : 0.5 * std::pow(static_cast<double>(chunks) / m, 3.0);
        best = std::max(best, fmean * (1.0 - penalty));
    }
    return best;
}

std::set<std::string> extract_entities(const Tokens& caption,
                                       const std::vector<std::string>& categories) {
    std::set<std::string> out;
    for (const std::string& cat : categories) {
        Tokens cat_toks;
        std::istringstream iss(cat);
        for (std::string w; iss >> w;) cat_toks.push_back(w);
        if (cat_toks.empty()) continue;
        for (size_t i = 0; i + cat_toks.size() <= caption.size(); ++i) {
            if (std::equal(cat_toks.begin(), cat_toks.end(), caption.begin() + i)) {
                out.insert(cat);
                break;
            }
        }
    }
    return out;
}

AmbiguityReport ambiguity_eval(const std::vector<EvalRecord>& records,
                               const std::vector<std::string>& categories) {
    if (records.empty()) throw InputError("ambiguity_eval: empty record list");
    AmbiguityReport rep;
    for (const EvalRecord& rec : records) {
        for (const std::string& cat : categories) {
            bool pred = rec.pred_entities.count(cat) > 0;
            bool truth = rec.truth_entities.count(cat) > 0;
            if (pred && truth) ++rep.tp;
            else if (pred && !truth) ++rep.fp;
            else if (!pred && truth) ++rep.fn;
            else ++rep.tn;
        }
    }
    rep.precision = rep.tp + rep.fp == 0 ? 1.0 : static_cast<double>(rep.tp) / (rep.tp + rep.fp);
    rep.recall = rep.tp + rep.fn == 0 ? 1.0 : static_cast<double>(rep.tp) / (rep.tp + rep.fn);
    rep.f1 = rep.precision + rep.recall == 0
                 ? 0.0
                 : 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall);
    rep.fpr = rep.fp + rep.tn == 0 ? 0.0 : static_cast<double>(rep.fp) / (rep.fp + rep.tn);

    double sb = 0, sm = 0;
    long count = 0;
    for (const EvalRecord& rec : records) {
        if (!rec.small_scale) continue;
        sb += bleu_n(rec.hyp, rec.refs, 4);
        sm += meteor_simple(rec.hyp, rec.refs);
        ++count;
    }
    if (count > 0) {
        rep.small_scale_bleu4 = sb / count;
        rep.small_scale_meteor = sm / count;
    }
    return rep;
}

}  // namespace stand::metrics
