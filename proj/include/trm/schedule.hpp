#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trm/errors.hpp"

namespace trm {

struct KernelStep {
    int kernel_h = 0;
    int kernel_w = 0;
    int out_h = 0;  // feature map size after this step (valid convolution)
    int out_w = 0;
    bool has_bias = false;
};

/// Per-layer kernel sizes for the shrinking convolution stack: starting from
/// the grid size, keep convolving until the feature map is [1 x 1].
struct KernelSchedule {
    int base_k = 0;
    int grid_h = 0;
    int grid_w = 0;
    std::vector<KernelStep> steps;

    int size() const { return static_cast<int>(steps.size()); }
};

/// Derives the stack for a grid of (H, W) and base kernel k: while the
/// feature map exceeds k in either dimension, use a k x k kernel (clamped
/// per-dimension so it fits); once it no longer does, use a kernel the size
/// of the feature map, which finishes at [1 x 1]. Bias is placed on the
/// first and last convolutions only.
KernelSchedule derive_schedule(int grid_h, int grid_w, int base_k);

/// Trainable parameter count for a stack with C filters per layer. The first
/// layer sees the single-channel topographic map; later layers see C channels.
/// Batch normalization layers carry no trainable parameters here.
std::int64_t count_parameters(int channels, const KernelSchedule& schedule);

std::string schedule_to_text(const KernelSchedule& schedule);
std::string schedule_to_csv(const KernelSchedule& schedule);

}  // namespace trm
