#include "lmf/svm.hpp"

#include "lmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace lmf {

void KernelParams::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw Error(ErrorCode::InvalidArgument, "gamma must be positive and finite");
    }
}

double rbf_kernel(std::span<const double> x, std::span<const double> z, const KernelParams& k) {
    if (x.size() != z.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "kernel inputs have dimensions " + std::to_string(x.size()) + " and " + std::to_string(z.size()));
    }
    double d2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = x[j] - z[j];
        d2 += d * d;
    }
    return std::exp(-k.gamma * d2);
}

double ClassWeights::for_label(Label label) const {
    return for_sign(label_sign(label));
}

ClassWeights compute_class_weights(std::span<const Label> labels) {
    std::size_t n_real = 0;
    std::size_t n_fake = 0;
    for (auto l : labels) {
        (label_sign(l) > 0 ? n_fake : n_real) += 1;
    }
    if (n_real == 0 || n_fake == 0) {
        throw Error(ErrorCode::SingleClass, "single class: class weights need both real and fake samples");
    }
    const double n = static_cast<double>(labels.size());
    return {n / (2.0 * static_cast<double>(n_real)), n / (2.0 * static_cast<double>(n_fake))};
}

void TrainParams::validate() const {
    if (!(c > 0.0) || !std::isfinite(c)) {
        throw Error(ErrorCode::InvalidArgument, "c must be positive and finite");
    }
    kernel.validate();
    if (!(class_weights.real > 0.0) || !(class_weights.fake > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "class weights must be positive");
    }
    if (!(kkt_tolerance > 0.0) || max_passes < 1) {
        throw Error(ErrorCode::InvalidArgument, "kkt tolerance and max passes must be positive");
    }
}

double decision(const KernelMachine& machine, std::span<const double> x) {
    double sum = 0.0;
    for (std::size_t i = 0; i < machine.support_vectors.size(); ++i) {
        sum += machine.dual_coefficients[i] * rbf_kernel(machine.support_vectors[i], x, machine.kernel);
    }
    return sum + machine.bias;
}

std::vector<double> decision_batch(const KernelMachine& machine, std::span<const Sample> xs, unsigned threads) {
    std::vector<double> out(xs.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, xs.size())));
    const std::size_t chunk = (xs.size() + threads - 1) / threads;

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = decision(machine, xs[i]);
    };
    if (threads == 1) {
        work(0, xs.size());
        return out;
    }
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = t * chunk;
        const std::size_t end = std::min(xs.size(), begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(work, begin, end);
    }
    pool.clear();
    return out;
}

GramMatrix::GramMatrix(std::span<const Sample> xs, const KernelParams& k) : n_(xs.size()), data_(n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i) {
        data_[i * n_ + i] = rbf_kernel(xs[i], xs[i], k);
        for (std::size_t j = i + 1; j < n_; ++j) {
            const double v = rbf_kernel(xs[i], xs[j], k);
            data_[i * n_ + j] = v;
            data_[j * n_ + i] = v;
        }
    }
}

GramMatrix GramMatrix::subset(std::span<const std::size_t> indices) const {
    GramMatrix out;
    out.n_ = indices.size();
    out.data_.resize(out.n_ * out.n_);
    for (std::size_t a = 0; a < out.n_; ++a) {
        for (std::size_t b = 0; b < out.n_; ++b) {
            out.data_[a * out.n_ + b] = (*this)(indices[a], indices[b]);
        }
    }
    return out;
}

} // namespace lmf
