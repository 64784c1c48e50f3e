#pragma once

#include <random>

#include "ttlab/gradcore/graph.hpp"
#include "ttlab/gradcore/tensor.hpp"
#include "ttlab/synthvid/dataset.hpp"

namespace testing {

inline ttlab::Tensor random_tensor(const ttlab::Shape& shape, std::uint64_t seed, double lo = 0.05, double hi = 0.95) {
    ttlab::Tensor t(shape);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    for (auto& v : t.data()) v = u(rng);
    return t;
}

// Small dataset that trains in a second or two.
inline ttlab::synthvid::DatasetSpec tiny_spec() {
    ttlab::synthvid::DatasetSpec s;
    s.frames = 8;
    s.height = 16;
    s.width = 16;
    s.train_per_class = 4;
    s.eval_per_class = 2;
    s.square = 4;
    return s;
}

inline ttlab::Tensor& param(ttlab::Model& m, std::size_t layer, std::size_t which = 0) {
    return m.parameters().at(m.param_offset(layer) + which).value;
}

}  // namespace testing
