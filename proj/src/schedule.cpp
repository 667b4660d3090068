#include "trm/schedule.hpp"

#include <algorithm>
#include <sstream>

namespace trm {

KernelSchedule derive_schedule(int grid_h, int grid_w, int base_k) {
    if (grid_h < 1 || grid_w < 1) throw ValidationError("grid dims must be >= 1");
    if (base_k < 2) throw ValidationError("base kernel must be >= 2");

    KernelSchedule sched;
    sched.base_k = base_k;
    sched.grid_h = grid_h;
    sched.grid_w = grid_w;

    int h = grid_h, w = grid_w;
    while (true) {
        KernelStep step;
        if (h > base_k || w > base_k) {
            step.kernel_h = std::min(base_k, h);
            step.kernel_w = std::min(base_k, w);
        } else {
            step.kernel_h = h;
            step.kernel_w = w;
        }
        step.out_h = h - step.kernel_h + 1;
        step.out_w = w - step.kernel_w + 1;
        sched.steps.push_back(step);
        h = step.out_h;
        w = step.out_w;
        if (h == 1 && w == 1) break;
    }
    sched.steps.front().has_bias = true;
    sched.steps.back().has_bias = true;
    return sched;
}

std::int64_t count_parameters(int channels, const KernelSchedule& schedule) {
    if (channels < 1) throw ValidationError("channel count must be >= 1");
    std::int64_t total = 0;
    for (std::size_t i = 0; i < schedule.steps.size(); ++i) {
        const auto& s = schedule.steps[i];
        const std::int64_t cin = (i == 0) ? 1 : channels;
        total += static_cast<std::int64_t>(channels) * cin * s.kernel_h * s.kernel_w;
        if (s.has_bias) total += channels;
    }
    return total;
}

std::string schedule_to_text(const KernelSchedule& schedule) {
    std::ostringstream os;
    os << "grid " << schedule.grid_h << "x" << schedule.grid_w << ", base kernel "
       << schedule.base_k << ", " << schedule.size() << " step(s)\n";
    int h = schedule.grid_h, w = schedule.grid_w;
    for (std::size_t i = 0; i < schedule.steps.size(); ++i) {
        const auto& s = schedule.steps[i];
        os << "  step " << i + 1 << ": " << h << "x" << w << " --(" << s.kernel_h << "x"
           << s.kernel_w << (s.has_bias ? ", bias" : "") << ")--> " << s.out_h << "x" << s.out_w
           << "\n";
        h = s.out_h;
        w = s.out_w;
    }
    return os.str();
}

std::string schedule_to_csv(const KernelSchedule& schedule) {
    std::ostringstream os;
    os << "step,kernel_h,kernel_w,out_h,out_w,has_bias\n";
    for (std::size_t i = 0; i < schedule.steps.size(); ++i) {
        const auto& s = schedule.steps[i];
        os << i + 1 << "," << s.kernel_h << "," << s.kernel_w << "," << s.out_h << "," << s.out_w
           << "," << (s.has_bias ? 1 : 0) << "\n";
    }
    return os.str();
}

}  // namespace trm
