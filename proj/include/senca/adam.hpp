#pragma once

#include <vector>

#include "senca/tensor.hpp"

namespace senca {

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard bias-corrected Adam. Moment buffers mirror the parameter list
// passed at construction; step() must receive the same list each time.
class AdamState {
public:
    AdamState(const std::vector<Tensor*>& params, AdamConfig cfg);

    void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);

    long step_count() const { return step_; }
    const AdamConfig& config() const { return cfg_; }
    const Tensor& first_moment(size_t i) const { return m_[i]; }
    const Tensor& second_moment(size_t i) const { return v_[i]; }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    long step_ = 0;
};

}  // namespace senca
