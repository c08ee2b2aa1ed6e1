#pragma once

#include <cmath>
#include <limits>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "varicurate/error.hpp"
#include "varicurate/rng.hpp"
#include "varicurate/vendi.hpp"

namespace varicurate {

/// Cumulative signal fractions alpha_bar[t] for t = 0..T; alpha_bar[0] = 1.
class NoiseSchedule {
public:
    explicit NoiseSchedule(std::vector<double> alpha_bar) : alpha_bar_(std::move(alpha_bar)) {
        require(alpha_bar_.size() >= 2, ErrorKind::Parameter, "noise schedule needs at least one step");
        require(alpha_bar_.front() == 1.0, ErrorKind::Parameter, "alpha_bar[0] must be 1");
        for (std::size_t t = 1; t < alpha_bar_.size(); ++t) {
            if (!(alpha_bar_[t] < alpha_bar_[t - 1])) {
                fail(ErrorKind::Parameter, "alpha_bar must be strictly decreasing (step " + std::to_string(t) + ")");
            }
        }
        require(alpha_bar_.back() > 0.0, ErrorKind::Parameter, "alpha_bar[T] must be positive");
    }

    /// DDPM linear beta schedule (1e-4 .. 0.02 over 1000 steps) rescaled to T steps.
    static NoiseSchedule linear(std::size_t steps, double beta_start = 1e-4, double beta_end = 0.02) {
        require(steps >= 1, ErrorKind::Parameter, "schedule needs at least one step");
        const double scale = 1000.0 / static_cast<double>(steps);
        std::vector<double> alpha_bar(steps + 1, 1.0);
        for (std::size_t t = 1; t <= steps; ++t) {
            const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(steps - 1);
            const double beta = std::min(0.999, scale * (beta_start + frac * (beta_end - beta_start)));
            alpha_bar[t] = alpha_bar[t - 1] * (1.0 - beta);
        }
        return NoiseSchedule(std::move(alpha_bar));
    }

    std::size_t steps() const noexcept { return alpha_bar_.size() - 1; }
    double alpha_bar(std::size_t t) const { return alpha_bar_.at(t); }
    const std::vector<double>& values() const noexcept { return alpha_bar_; }

private:
    std::vector<double> alpha_bar_;
};

struct MixtureComponent {
    double weight = 1.0;
    std::vector<double> mean;
    double variance = 1.0;  // isotropic
    int condition = -1;     // demographic cell this component represents, -1 = any
};

/// Isotropic Gaussian mixture standing in for a trained denoiser.
class MixtureModel {
public:
    explicit MixtureModel(std::vector<MixtureComponent> components) : components_(std::move(components)) {
        require(!components_.empty(), ErrorKind::Parameter, "mixture needs at least one component");
        dim_ = components_.front().mean.size();
        require(dim_ >= 1, ErrorKind::Parameter, "mixture dimension must be positive");
        double total = 0.0;
        for (const auto& c : components_) {
            require(c.mean.size() == dim_, ErrorKind::Parameter, "mixture components differ in dimension");
            require(c.variance > 0.0, ErrorKind::Parameter, "mixture variances must be positive");
            require(c.weight >= 0.0, ErrorKind::Parameter, "mixture weights must be non-negative");
            total += c.weight;
        }
        require(std::abs(total - 1.0) < 1e-9, ErrorKind::Parameter, "mixture weights must sum to 1");
    }

    /// k equally weighted components at distance `radius` along distinct axes
    /// (axis c mod dim, sign flipped on every wrap), component c tagged with
    /// condition c.
    static MixtureModel well_separated(std::size_t k, std::size_t dim, double radius = 3.0, double variance = 0.1) {
        require(k >= 1 && dim >= 1, ErrorKind::Parameter, "need at least one component and dimension");
        std::vector<MixtureComponent> comps;
        for (std::size_t c = 0; c < k; ++c) {
            MixtureComponent comp;
            comp.weight = 1.0 / static_cast<double>(k);
            comp.mean.assign(dim, 0.0);
            comp.mean[c % dim] = ((c / dim) % 2 == 0 ? 1.0 : -1.0) * radius;
            comp.variance = variance;
            comp.condition = static_cast<int>(c);
            comps.push_back(std::move(comp));
        }
        return MixtureModel(std::move(comps));
    }

    /// Sub-mixture for one condition, weights renormalized.
    MixtureModel conditioned(int condition) const {
        std::vector<MixtureComponent> kept;
        double total = 0.0;
        for (const auto& c : components_) {
            if (c.condition == condition || c.condition == -1) {
                kept.push_back(c);
                total += c.weight;
            }
        }
        require(!kept.empty() && total > 0.0, ErrorKind::Parameter, "no mixture component for condition " + std::to_string(condition));
        for (auto& c : kept) c.weight /= total;
        return MixtureModel(std::move(kept));
    }

    std::size_t dim() const noexcept { return dim_; }
    const std::vector<MixtureComponent>& components() const noexcept { return components_; }

    /// Responsibilities and log density of the noised marginal p_t at one point.
    /// Under the variance-preserving forward process component k becomes
    /// N(sqrt(ab) mu_k, (ab var_k + 1 - ab) I).
    double log_density(std::span<const double> z, double alpha_bar, std::vector<double>* responsibilities = nullptr) const {
        const double signal = std::sqrt(alpha_bar);
        const double d = static_cast<double>(dim_);
        std::vector<double> logp(components_.size(), -std::numeric_limits<double>::infinity());
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < components_.size(); ++k) {
            const auto& c = components_[k];
            if (c.weight <= 0.0) continue;
            const double var = alpha_bar * c.variance + 1.0 - alpha_bar;
            double dist2 = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) {
                const double diff = z[j] - signal * c.mean[j];
                dist2 += diff * diff;
            }
            logp[k] = std::log(c.weight) - 0.5 * d * std::log(2.0 * std::numbers::pi * var) - 0.5 * dist2 / var;
            if (logp[k] > top) top = logp[k];
        }
        if (!std::isfinite(top)) fail(ErrorKind::Numeric, "mixture responsibilities underflowed (non-finite latent?)");
        double total = 0.0;
        for (double lp : logp) total += std::exp(lp - top);
        if (responsibilities != nullptr) {
            responsibilities->resize(components_.size());
            for (std::size_t k = 0; k < components_.size(); ++k) (*responsibilities)[k] = std::exp(logp[k] - top) / total;
        }
        return top + std::log(total);
    }

    /// Gradient of log p_t at one point.
    std::vector<double> score(std::span<const double> z, double alpha_bar) const {
        std::vector<double> resp;
        log_density(z, alpha_bar, &resp);
        const double signal = std::sqrt(alpha_bar);
        std::vector<double> out(dim_, 0.0);
        for (std::size_t k = 0; k < components_.size(); ++k) {
            if (resp[k] == 0.0) continue;
            const auto& c = components_[k];
            const double var = alpha_bar * c.variance + 1.0 - alpha_bar;
            for (std::size_t j = 0; j < dim_; ++j) out[j] += resp[k] * (signal * c.mean[j] - z[j]) / var;
        }
        return out;
    }

private:
    std::vector<MixtureComponent> components_;
    std::size_t dim_ = 0;
};

/// Closed-form noise prediction eps(z, t) = -sqrt(1 - ab_t) grad log p_t(z), row by row.
inline Matrix analytic_eps(const Matrix& z, std::size_t t, const NoiseSchedule& schedule, const MixtureModel& model) {
    require(t >= 1 && t <= schedule.steps(), ErrorKind::Parameter, "step t must lie in [1, T]");
    require(static_cast<std::size_t>(z.cols()) == model.dim(), ErrorKind::Parameter, "latent dimension does not match the mixture");
    const double ab = schedule.alpha_bar(t);
    const double noise = std::sqrt(1.0 - ab);
    Matrix eps(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        auto s = model.score(std::span<const double>(z.row(i).data(), model.dim()), ab);
        for (Eigen::Index j = 0; j < z.cols(); ++j) eps(i, j) = -noise * s[static_cast<std::size_t>(j)];
    }
    return eps;
}

/// Embedding map f: latent -> unit sphere, either plain row normalization or
/// a fixed linear map followed by normalization. apply() returns the
/// pre-normalization rows; the Vendi gradient includes normalization itself.
class EmbedMap {
public:
    static EmbedMap sphere() { return EmbedMap(); }

    /// W is out_dim x latent_dim; embeddings are normalize(W z).
    static EmbedMap linear(Matrix weights) {
        EmbedMap m;
        m.weights_ = std::move(weights);
        return m;
    }

    static EmbedMap random_linear(std::size_t latent_dim, std::size_t out_dim, std::uint64_t seed) {
        Rng rng(seed);
        Matrix w(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(latent_dim));
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.normal() / std::sqrt(static_cast<double>(latent_dim));
        }
        return linear(std::move(w));
    }

    Matrix apply(const Matrix& latents) const {
        if (!weights_) return latents;
        require(latents.cols() == weights_->cols(), ErrorKind::Parameter, "latent dimension does not match the embedding map");
        return latents * weights_->transpose();
    }

    /// Chains a gradient on the pre-normalization rows back to the latents.
    Matrix pullback(const Matrix& grad_rows) const {
        if (!weights_) return grad_rows;
        return grad_rows * (*weights_);
    }

    Matrix embed(const Matrix& latents) const {
        Matrix raw = apply(latents);
        for (Eigen::Index i = 0; i < raw.rows(); ++i) {
            const double n = raw.row(i).norm();
            if (!(n > 0.0)) fail(ErrorKind::Data, "degenerate embedding: latent row maps to zero");
            raw.row(i) /= n;
        }
        return raw;
    }

private:
    std::optional<Matrix> weights_;
};

enum class SamplerKind { Ancestral, Deterministic };

struct GuidanceConfig {
    double scale = 0.0;
    std::size_t batch_size = 64;
    std::size_t self_recurrence = 0;
    SamplerKind sampler = SamplerKind::Ancestral;
    std::uint64_t seed = 0;
    std::optional<int> condition;  // restricts the mixture to one demographic cell

    void validate() const {
        require(scale >= 0.0 && std::isfinite(scale), ErrorKind::Parameter, "guidance scale must be finite and >= 0");
        require(batch_size >= 1, ErrorKind::Parameter, "batch size must be positive");
        require(scale == 0.0 || batch_size >= 2, ErrorKind::Parameter, "Vendi guidance needs a batch of at least 2");
    }
};

struct SandboxTrajectory {
    std::vector<Matrix> latents;          // latents[t] = z_t, t = 0..T
    std::vector<double> denoised_vendi;   // VS of the denoised-batch embeddings, in step order t = T..1
    std::vector<double> denoised_cosine;  // mean pairwise cosine of the same, t = T..1
    Matrix final_embeddings;              // f(z_0), unit rows
};

/// Mean off-diagonal cosine similarity between rows (0 for fewer than 2 rows).
inline double mean_pairwise_cosine(const Matrix& rows) {
    const Eigen::Index m = rows.rows();
    if (m < 2) return 0.0;
    Matrix unit = rows;
    for (Eigen::Index i = 0; i < m; ++i) unit.row(i) /= unit.row(i).norm();
    const Eigen::RowVectorXd total = unit.colwise().sum();
    const double offdiag = total.squaredNorm() - unit.rowwise().squaredNorm().sum();
    return offdiag / static_cast<double>(m * (m - 1));
}

/// Clean-sample estimate z0_hat = (z_t - sqrt(1 - ab_t) eps) / sqrt(ab_t).
inline Matrix predict_clean(const Matrix& z, const Matrix& eps, double alpha_bar) {
    return (z - std::sqrt(1.0 - alpha_bar) * eps) / std::sqrt(alpha_bar);
}

/// One sampler update S(z_t, eps_hat, t) -> z_{t-1}.
inline Matrix sampler_step(SamplerKind kind, const Matrix& z, const Matrix& eps_hat, std::size_t t,
                           const NoiseSchedule& schedule, Rng& rng) {
    const double ab_t = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t - 1);
    const Matrix x0 = predict_clean(z, eps_hat, ab_t);
    if (kind == SamplerKind::Deterministic) {
        // DDIM, eta = 0
        return std::sqrt(ab_prev) * x0 + std::sqrt(1.0 - ab_prev) * eps_hat;
    }
    // DDPM ancestral: posterior q(z_{t-1} | z_t, x0)
    const double alpha = ab_t / ab_prev;
    const double beta = 1.0 - alpha;
    const double mean_x0 = std::sqrt(ab_prev) * beta / (1.0 - ab_t);
    const double mean_zt = std::sqrt(alpha) * (1.0 - ab_prev) / (1.0 - ab_t);
    const double sigma = std::sqrt(beta * (1.0 - ab_prev) / (1.0 - ab_t));
    Matrix next = mean_x0 * x0 + mean_zt * z;
    for (Eigen::Index i = 0; i < next.rows(); ++i) {
        for (Eigen::Index j = 0; j < next.cols(); ++j) next(i, j) += sigma * rng.normal();
    }
    return next;
}

/// Gradient of L_VS(f(z0_hat)) with respect to z_t, eps held fixed at its
/// evaluated value (so d z0_hat / d z_t = I / sqrt(ab_t)).
inline Matrix guidance_gradient(const Matrix& z, const Matrix& eps, std::size_t t, const NoiseSchedule& schedule,
                                const EmbedMap& embed, VendiResult* result = nullptr) {
    const double ab = schedule.alpha_bar(t);
    const Matrix x0 = predict_clean(z, eps, ab);
    auto vr = vendi_loss_grad(embed.apply(x0));
    Matrix grad = embed.pullback(*vr.gradient) / std::sqrt(ab);
    if (result != nullptr) *result = std::move(vr);
    return grad;
}

namespace detail {

inline Matrix initial_latents(std::size_t m, std::size_t d, Rng& rng) {
    Matrix z(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
    }
    return z;
}

inline void log_denoised(SandboxTrajectory& traj, const Matrix& embedded_raw) {
    traj.denoised_vendi.push_back(embedded_raw.rows() >= 1 ? vendi_score(embedded_raw).score : 1.0);
    traj.denoised_cosine.push_back(mean_pairwise_cosine(embedded_raw));
}

}  // namespace detail

/// Plain sampler without guidance; the reference path for guided_sample at s = 0.
inline SandboxTrajectory sample_unguided(const NoiseSchedule& schedule, const MixtureModel& model, const EmbedMap& embed,
                                         SamplerKind sampler, std::size_t batch_size, std::uint64_t seed) {
    require(batch_size >= 1, ErrorKind::Parameter, "batch size must be positive");
    Rng rng(seed);
    const std::size_t steps = schedule.steps();
    SandboxTrajectory traj;
    traj.latents.resize(steps + 1);
    Matrix z = detail::initial_latents(batch_size, model.dim(), rng);
    traj.latents[steps] = z;
    for (std::size_t t = steps; t >= 1; --t) {
        const Matrix eps = analytic_eps(z, t, schedule, model);
        detail::log_denoised(traj, embed.apply(predict_clean(z, eps, schedule.alpha_bar(t))));
        z = sampler_step(sampler, z, eps, t, schedule, rng);
        traj.latents[t - 1] = z;
    }
    traj.final_embeddings = embed.embed(z);
    return traj;
}

/// Face Vendi Score Guidance over the sandbox sampler.
///
/// Per step: eps from the model, z0_hat from eps, embeddings f(z0_hat),
/// eps_hat = eps + s * grad_{z_t} L_VS, z_{t-1} = S(z_t, eps_hat, t). With
/// self_recurrence = r the step is redone r more times after renoising
/// z_t <- sqrt(ab_t/ab_{t-1}) z_{t-1} + sqrt(1 - ab_t/ab_{t-1}) eps'; the
/// last pass is not renoised.
inline SandboxTrajectory guided_sample(const NoiseSchedule& schedule, const MixtureModel& model, const EmbedMap& embed,
                                       const GuidanceConfig& cfg) {
    cfg.validate();
    const MixtureModel active = cfg.condition ? model.conditioned(*cfg.condition) : model;
    Rng rng(cfg.seed);
    const std::size_t steps = schedule.steps();
    SandboxTrajectory traj;
    traj.latents.resize(steps + 1);
    Matrix z = detail::initial_latents(cfg.batch_size, active.dim(), rng);
    traj.latents[steps] = z;
    for (std::size_t t = steps; t >= 1; --t) {
        const double ab_t = schedule.alpha_bar(t);
        const double ab_prev = schedule.alpha_bar(t - 1);
        Matrix next;
        for (std::size_t pass = 0; pass <= cfg.self_recurrence; ++pass) {
            const Matrix eps = analytic_eps(z, t, schedule, active);
            const bool last = pass == cfg.self_recurrence;
            if (cfg.scale > 0.0) {
                VendiResult vr;
                const Matrix grad = guidance_gradient(z, eps, t, schedule, embed, &vr);
                if (last) {
                    traj.denoised_vendi.push_back(vr.score);
                    traj.denoised_cosine.push_back(mean_pairwise_cosine(embed.apply(predict_clean(z, eps, ab_t))));
                }
                next = sampler_step(cfg.sampler, z, eps + cfg.scale * grad, t, schedule, rng);
            } else {
                if (last) detail::log_denoised(traj, embed.apply(predict_clean(z, eps, ab_t)));
                next = sampler_step(cfg.sampler, z, eps, t, schedule, rng);
            }
            if (!last) {
                const double ratio = ab_t / ab_prev;
                for (Eigen::Index i = 0; i < z.rows(); ++i) {
                    for (Eigen::Index j = 0; j < z.cols(); ++j) {
                        z(i, j) = std::sqrt(ratio) * next(i, j) + std::sqrt(1.0 - ratio) * rng.normal();
                    }
                }
            }
        }
        z = std::move(next);
        if (!z.allFinite()) fail(ErrorKind::Numeric, "non-finite latent at step " + std::to_string(t));
        traj.latents[t - 1] = z;
    }
    traj.final_embeddings = embed.embed(z);
    return traj;
}

struct DiversityReport {
    double mean_pairwise_cosine = 0.0;
    double final_vendi = 1.0;
    std::vector<double> vendi_series;  // t = T..1
};

inline DiversityReport diversity_report(const SandboxTrajectory& traj) {
    DiversityReport out;
    out.mean_pairwise_cosine = mean_pairwise_cosine(traj.final_embeddings);
    out.final_vendi = traj.final_embeddings.rows() >= 1 ? vendi_score(traj.final_embeddings).score : 1.0;
    out.vendi_series = traj.denoised_vendi;
    return out;
}

}  // namespace varicurate
