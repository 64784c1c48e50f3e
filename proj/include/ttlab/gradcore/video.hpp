#pragma once

#include <compare>
#include <cstddef>

#include "ttlab/gradcore/tensor.hpp"

namespace ttlab {

// Ground-truth or predicted class index.
struct Label {
    int index = 0;

    auto operator<=>(const Label&) const = default;
};

// A T x H x W x C clip with every value in [0, 1] and at least two frames.
class VideoClip {
public:
    VideoClip() = default;
    explicit VideoClip(Tensor frames);

    const Tensor& tensor() const noexcept { return frames_; }
    const Shape& shape() const noexcept { return frames_.shape(); }

    std::size_t frames() const noexcept { return frames_.dim(0); }
    std::size_t height() const noexcept { return frames_.dim(1); }
    std::size_t width() const noexcept { return frames_.dim(2); }
    std::size_t channels() const noexcept { return frames_.dim(3); }
    std::size_t frame_size() const noexcept { return height() * width() * channels(); }

    bool operator==(const VideoClip&) const = default;

private:
    Tensor frames_;
};

// Validates the clip shape contract without the [0,1] range check; used for
// gradient tensors that share the clip layout.
void require_video_shape(const Shape& shape);

}  // namespace ttlab
