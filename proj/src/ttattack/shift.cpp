#include "ttlab/ttattack/shift.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <random>

#include "ttlab/errors.hpp"

namespace ttlab::ttattack {

namespace {

std::size_t frame_size_of(const Tensor& x, std::size_t frames) {
    if (x.rank() < 1 || x.dim(0) != frames) {
        throw InputError("tensor " + shape_str(x.shape()) + " does not have " + std::to_string(frames) + " frames");
    }
    return x.size() / frames;
}

}  // namespace

Tensor temporal_shift(const Tensor& x, long shift) {
    if (x.rank() < 1) throw InputError("temporal_shift needs a time axis");
    const long T = static_cast<long>(x.dim(0));
    if (std::labs(shift) >= T) {
        throw RangeError("temporal shift " + std::to_string(shift) + " out of range for " + std::to_string(T) +
                         " frames");
    }
    return FramePermutation::rotation(x.dim(0), shift).apply(x);
}

FramePermutation::FramePermutation(std::vector<std::size_t> source) : source_(std::move(source)) {
    std::vector<bool> seen(source_.size(), false);
    for (std::size_t s : source_) {
        if (s >= source_.size() || seen[s]) throw InputError("frame order is not a permutation");
        seen[s] = true;
    }
}

FramePermutation FramePermutation::identity(std::size_t frames) {
    std::vector<std::size_t> src(frames);
    std::iota(src.begin(), src.end(), std::size_t{0});
    return FramePermutation(std::move(src));
}

FramePermutation FramePermutation::rotation(std::size_t frames, long shift) {
    const long T = static_cast<long>(frames);
    std::vector<std::size_t> src(frames);
    for (long t = 0; t < T; ++t) src[static_cast<std::size_t>(t)] = static_cast<std::size_t>(((t - shift) % T + T) % T);
    return FramePermutation(std::move(src));
}

bool FramePermutation::is_identity() const noexcept {
    for (std::size_t t = 0; t < source_.size(); ++t) {
        if (source_[t] != t) return false;
    }
    return true;
}

FramePermutation FramePermutation::inverse() const {
    std::vector<std::size_t> inv(source_.size());
    for (std::size_t t = 0; t < source_.size(); ++t) inv[source_[t]] = t;
    return FramePermutation(std::move(inv));
}

FramePermutation FramePermutation::then(const FramePermutation& next) const {
    if (next.size() != size()) throw InputError("cannot compose permutations of different lengths");
    std::vector<std::size_t> src(size());
    for (std::size_t t = 0; t < size(); ++t) src[t] = source_[next.source_[t]];
    return FramePermutation(std::move(src));
}

Tensor FramePermutation::apply(const Tensor& x) const {
    const std::size_t fs = frame_size_of(x, source_.size());
    Tensor out(x.shape());
    for (std::size_t t = 0; t < source_.size(); ++t) {
        std::copy_n(x.data().begin() + static_cast<long>(source_[t] * fs), fs,
                    out.data().begin() + static_cast<long>(t * fs));
    }
    return out;
}

std::string_view to_string(ShiftKind kind) {
    switch (kind) {
        case ShiftKind::adjacent: return "adjacent";
        case ShiftKind::random: return "random";
        case ShiftKind::remote: return "remote";
    }
    return "unknown";
}

ShiftKind shift_kind_from_string(std::string_view name) {
    for (auto k : {ShiftKind::adjacent, ShiftKind::random, ShiftKind::remote}) {
        if (to_string(k) == name) return k;
    }
    throw SpecError("unknown shift strategy '" + std::string(name) + "'");
}

FramePermutation translation(const ShiftStrategy& strategy, long index, std::size_t frames) {
    switch (strategy.kind) {
        case ShiftKind::adjacent:
            return FramePermutation::rotation(frames, index);
        case ShiftKind::remote:
            return FramePermutation::rotation(frames, index + static_cast<long>(frames / 2));
        case ShiftKind::random: {
            if (index == 0) return FramePermutation::identity(frames);
            std::seed_seq seq{static_cast<std::uint32_t>(strategy.seed), static_cast<std::uint32_t>(strategy.seed >> 32),
                              static_cast<std::uint32_t>(index + (1L << 20))};
            std::mt19937_64 rng(seq);
            std::vector<std::size_t> src(frames);
            std::iota(src.begin(), src.end(), std::size_t{0});
            std::shuffle(src.begin(), src.end(), rng);
            return FramePermutation(std::move(src));
        }
    }
    throw SpecError("unknown shift strategy");
}

}  // namespace ttlab::ttattack
