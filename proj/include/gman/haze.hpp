#pragma once

#include "gman/tensor.hpp"

namespace gman::haze {

// Depth and transmission maps are single-channel tensors shaped (1,1,h,w).
// Depth values are nonnegative in arbitrary units consistent with beta;
// transmission values live in (0,1].
using DepthMap = Tensor;
using TransmissionMap = Tensor;

// Scattering parameters: one hazy image = clear*t + A*(1-t) with a global
// atmosphere light shared by all channels.
struct HazeParams {
  double atmosphere_light = 1.0;  // A in [0,1]
  double beta = 1.0;              // scattering coefficient, >= 0

  void validate() const;  // throws ArgumentError
};

enum class DepthKind { kConstant, kRamp, kRadial };

// constant: all `constant`; ramp: rows run 0..1 top to bottom; radial:
// normalized distance from the image center (0 at center, 1 at the corners).
DepthMap gen_depth(DepthKind kind, int h, int w, double constant = 0.5);

// t = exp(-beta * d) elementwise.
TransmissionMap transmission(const DepthMap& depth, double beta);

// I = J*t + A*(1-t), the same t applied to every channel. This exact
// expression keeps I in [0,1] whenever J, A and t are (do not rearrange it;
// the range-preservation test asserts with zero tolerance).
Tensor synthesize(const Tensor& clear, const TransmissionMap& t, const HazeParams& params);

// J = (I - A*(1-tv)) / tv with tv = max(t, t_floor), the exact inversion
// used as the plug-in restoration baseline and round-trip oracle.
Tensor invert(const Tensor& hazy, const TransmissionMap& t, const HazeParams& params,
              double t_floor = 1e-4);

}  // namespace gman::haze
