#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "ttlab/gradcore/tensor.hpp"

namespace ttlab::ttattack {

// Circular translation along the leading (time) axis:
// output frame t is input frame (t - shift) mod T. Throws RangeError when
// |shift| >= T.
Tensor temporal_shift(const Tensor& x, long shift);

// A reordering of frames: output frame t is input frame source[t].
class FramePermutation {
public:
    FramePermutation() = default;
    explicit FramePermutation(std::vector<std::size_t> source);  // throws InputError unless a permutation

    static FramePermutation identity(std::size_t frames);
    // Circular shift by any integer amount (taken modulo T).
    static FramePermutation rotation(std::size_t frames, long shift);

    std::size_t size() const noexcept { return source_.size(); }
    const std::vector<std::size_t>& source() const noexcept { return source_; }
    bool is_identity() const noexcept;

    FramePermutation inverse() const;
    // (*this followed by next)(x) = next(this(x)).
    FramePermutation then(const FramePermutation& next) const;
    Tensor apply(const Tensor& x) const;

    bool operator==(const FramePermutation&) const = default;

private:
    std::vector<std::size_t> source_;
};

enum class ShiftKind { adjacent, random, remote };

std::string_view to_string(ShiftKind kind);
ShiftKind shift_kind_from_string(std::string_view name);

struct ShiftStrategy {
    ShiftKind kind = ShiftKind::adjacent;
    std::uint64_t seed = 0;  // random strategy only

    bool operator==(const ShiftStrategy&) const = default;
};

// The translation used for copy index i under a strategy:
//  adjacent: rotation by i
//  remote:   rotation by i + floor(T/2)
//  random:   a uniform random permutation seeded by (seed, i); identity at i = 0
// The gradient of that copy is mapped back with the inverse permutation.
FramePermutation translation(const ShiftStrategy& strategy, long index, std::size_t frames);

}  // namespace ttlab::ttattack
