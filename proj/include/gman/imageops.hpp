#pragma once

#include "gman/tensor.hpp"

namespace gman::img {

// Copies the ch x cw window whose top-left corner is (y0, x0). Pure
// sub-array copy, no resampling.
Tensor crop_at(const Tensor& image, int y0, int x0, int ch, int cw);

// Grows h and w to the next multiples of `multiple` by mirroring rows and
// columns about the bottom/right edge (row h+i repeats row h-1-i). Images
// thinner than the padding replicate their last row/column.
Tensor reflect_pad_to_multiple(const Tensor& image, int multiple);

// Keeps the top-left h x w region; the inverse of reflect_pad_to_multiple.
Tensor crop_to(const Tensor& image, int h, int w);

}  // namespace gman::img
