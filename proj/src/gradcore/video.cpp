#include "ttlab/gradcore/video.hpp"

#include "ttlab/errors.hpp"

namespace ttlab {

void require_video_shape(const Shape& shape) {
    if (shape.size() != 4) throw InputError("video tensor must be T x H x W x C, got " + shape_str(shape));
    if (shape[0] < 2) throw InputError("video clip needs at least 2 frames, got " + shape_str(shape));
    for (std::size_t d : shape) {
        if (d == 0) throw InputError("video tensor has an empty axis " + shape_str(shape));
    }
}

VideoClip::VideoClip(Tensor frames) : frames_(std::move(frames)) {
    require_video_shape(frames_.shape());
    for (double v : frames_.data()) {
        if (!(v >= 0.0 && v <= 1.0)) throw InputError("video clip value outside [0,1]: " + std::to_string(v));
    }
}

}  // namespace ttlab
