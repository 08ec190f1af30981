#pragma once

#include <string>
#include <vector>

namespace stand::verify {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Trained-model-free property suite: DCT identities, frequency-mask
// algebra, contrastive-loss degenerate cases, structural invariants, and
// finite-difference gradient checks.
std::vector<CheckResult> run_all(std::uint64_t seed = 7);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace stand::verify
