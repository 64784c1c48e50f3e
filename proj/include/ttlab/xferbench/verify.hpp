#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ttlab::xferbench {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

// Quick oracle suite behind `ttlab verify`: finite-difference gradient
// checks on small untrained zoo models, shift round trips, weight matrix
// sums and symmetry, and the augmented gradient against a finite-difference
// gradient of the weighted loss. `coords` samples per gradient check.
std::vector<CheckResult> run_verify(std::uint64_t seed = 0, std::size_t coords = 20);

}  // namespace ttlab::xferbench
