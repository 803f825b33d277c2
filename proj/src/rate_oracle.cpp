#include "ehmac/rate_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ehmac/error.hpp"

namespace ehmac {

WeightOrder weight_order(const Vector& weights)
{
    WeightOrder out;
    const int k = static_cast<int>(weights.size());
    out.order.resize(k);
    std::iota(out.order.begin(), out.order.end(), 0);
    std::stable_sort(out.order.begin(), out.order.end(),
                     [&](int a, int b) { return weights[a] > weights[b]; });
    out.gaps.resize(k);
    for (int j = 0; j < k; ++j) {
        const double next = j + 1 < k ? weights[out.order[j + 1]] : 0.0;
        out.gaps[j] = weights[out.order[j]] - next;
    }
    return out;
}

RateOptions precise_rate_options()
{
    RateOptions o;
    o.max_iterations = 20000;
    o.relative_tolerance = 1e-15;
    o.gradient_tolerance = 1e-11;
    return o;
}

MacModel::MacModel(std::vector<ComplexMatrix> channels, Vector weights)
    : channels_(std::move(channels)), weights_(std::move(weights))
{
    if (channels_.empty()) throw InvalidInput("MAC needs at least one user");
    for (const auto& h : channels_) {
        if (h.rows() != channels_.front().rows() || h.cols() != channels_.front().cols())
            throw InvalidInput("channel dimension mismatch among users");
    }
    if (weights_.size() != static_cast<Eigen::Index>(channels_.size()))
        throw InvalidInput("weight vector length differs from user count");
    order_ = weight_order(weights_);
}

MacModel::MacModel(const Scenario& scenario) : MacModel(scenario.channels(), scenario.weights()) {}

namespace {

using Covariances = std::vector<ComplexMatrix>;

/// One instance of the per-epoch program: fixed traces for every user except
/// `free_user`, whose trace is priced at `price` instead.
class Ascent {
public:
    Ascent(const MacModel& mac, const Vector& powers, int free_user, double price,
           const RateOptions& options)
        : mac_(mac), powers_(powers), free_user_(free_user), price_(price), options_(options)
    {
        if (powers_.size() != mac_.users()) throw InvalidInput("power vector length differs from user count");
        for (int u = 0; u < mac_.users(); ++u) {
            if (u == free_user_) continue;
            if (!(powers_[u] >= 0.0) || !std::isfinite(powers_[u]))
                throw InvalidInput("powers must be finite and nonnegative");
        }
    }

    bool active(int u) const { return u == free_user_ || powers_[u] > 0.0; }

    Covariances initial(const Covariances* start) const
    {
        const int nt = mac_.tx_antennas();
        Covariances q(mac_.users());
        for (int u = 0; u < mac_.users(); ++u) {
            const bool have = start && static_cast<int>(start->size()) == mac_.users() &&
                              (*start)[u].rows() == nt && (*start)[u].cols() == nt;
            if (u == free_user_) {
                q[u] = have ? project_psd((*start)[u])
                            : ComplexMatrix(ComplexMatrix::Identity(nt, nt) / double(nt));
                continue;
            }
            if (!(powers_[u] > 0.0)) {
                q[u] = ComplexMatrix::Zero(nt, nt);
                continue;
            }
            double tr = have ? (*start)[u].trace().real() : 0.0;
            if (have && tr > 0.0)
                q[u] = project_trace_psd((*start)[u] * (powers_[u] / tr), powers_[u]);
            else
                q[u] = ComplexMatrix::Identity(nt, nt) * (powers_[u] / nt);
        }
        return q;
    }

    /// Penalized objective; fills the gradient when `grad` is non-null.
    double evaluate(const Covariances& q, Covariances* grad) const
    {
        const int k = mac_.users();
        const int nr = mac_.rx_antennas();
        const auto& ord = mac_.order();
        ComplexMatrix s = ComplexMatrix::Identity(nr, nr);
        double value = 0.0;
        if (grad) inverses_.assign(k, ComplexMatrix());
        for (int j = 0; j < k; ++j) {
            const int u = ord.order[j];
            if (active(u)) s.noalias() += mac_.channel(u) * q[u] * mac_.channel(u).adjoint();
            if (ord.gaps[j] <= 0.0) continue;
            Eigen::LLT<ComplexMatrix> llt(s);
            if (llt.info() != Eigen::Success) throw SolverError("covariance sum lost positive definiteness");
            double logdet = 0.0;
            for (int i = 0; i < nr; ++i) logdet += std::log(llt.matrixLLT()(i, i).real());
            value += ord.gaps[j] * 2.0 * logdet / std::numbers::ln2;
            if (grad) inverses_[j] = llt.solve(ComplexMatrix::Identity(nr, nr));
        }
        if (free_user_ >= 0) value -= price_ * q[free_user_].trace().real();
        if (!grad) return value;

        grad->assign(k, ComplexMatrix());
        ComplexMatrix m = ComplexMatrix::Zero(nr, nr);
        for (int j = k - 1; j >= 0; --j) {
            if (ord.gaps[j] > 0.0) m += ord.gaps[j] * inverses_[j];
            const int u = ord.order[j];
            const auto& h = mac_.channel(u);
            (*grad)[u] = h.adjoint() * m * h / std::numbers::ln2;
        }
        if (free_user_ >= 0) {
            const int nt = mac_.tx_antennas();
            (*grad)[free_user_] -= price_ * ComplexMatrix::Identity(nt, nt);
        }
        return value;
    }

    Covariances project(const Covariances& q) const
    {
        Covariances out(q.size());
        for (int u = 0; u < mac_.users(); ++u) {
            if (u == free_user_)
                out[u] = project_psd(q[u]);
            else if (powers_[u] > 0.0)
                out[u] = project_trace_psd(q[u], powers_[u]);
            else
                out[u] = q[u];
        }
        return out;
    }

    struct Result {
        Covariances q;
        double value = 0.0;
        Covariances grad;
        int iterations = 0;
        double residual = 0.0;
    };

    Result run(const Covariances* start) const
    {
        Result r;
        r.q = initial(start);
        bool any = false;
        for (int u = 0; u < mac_.users(); ++u) any = any || active(u);
        r.value = evaluate(r.q, &r.grad);
        if (!any) return r;

        double step = 1.0;
        for (int it = 1; it <= options_.max_iterations; ++it) {
            r.iterations = it;
            Covariances trial;
            double trial_value = 0.0;
            double ascent = 0.0;
            double moved = 0.0;
            bool accepted = false;
            while (step > 1e-300) {
                Covariances raw(r.q.size());
                for (std::size_t u = 0; u < r.q.size(); ++u)
                    raw[u] = active(static_cast<int>(u)) ? ComplexMatrix(r.q[u] + step * r.grad[u]) : r.q[u];
                trial = project(raw);
                ascent = 0.0;
                moved = 0.0;
                for (std::size_t u = 0; u < r.q.size(); ++u) {
                    const ComplexMatrix d = trial[u] - r.q[u];
                    ascent += real_inner(r.grad[u], d);
                    moved += d.squaredNorm();
                }
                if (!(ascent > 0.0) || moved == 0.0) break;
                trial_value = evaluate(trial, nullptr);
                if (trial_value >= r.value + options_.armijo * ascent) {
                    accepted = true;
                    break;
                }
                step *= options_.shrink;
            }
            if (!accepted) {
                // No ascent direction left at working precision.
                r.residual = step > 0.0 ? std::sqrt(moved) / step : 0.0;
                return r;
            }
            r.residual = std::sqrt(moved) / step;
            const double gain = trial_value - r.value;
            Covariances old_grad = std::move(r.grad);
            const Covariances previous = std::move(r.q);
            r.q = std::move(trial);
            r.value = evaluate(r.q, &r.grad);
            // Barzilai-Borwein step from the accepted move; curvature is negative for a concave objective.
            double ss = 0.0, sy = 0.0;
            for (std::size_t u = 0; u < r.q.size(); ++u) {
                if (!active(static_cast<int>(u))) continue;
                const ComplexMatrix d = r.q[u] - previous[u];
                ss += d.squaredNorm();
                sy += real_inner(d, ComplexMatrix(r.grad[u] - old_grad[u]));
            }
            const double scale = std::max(std::abs(r.value), 1e-300);
            if (r.residual < options_.gradient_tolerance || gain / scale < options_.relative_tolerance)
                return r;
            step = sy < 0.0 ? std::clamp(ss / -sy, 1e-30, 1e30) : std::min(step * 2.0, 1e30);
        }
        throw SolverError("weighted sum-rate ascent did not converge", r.residual);
    }

private:
    const MacModel& mac_;
    const Vector& powers_;
    int free_user_;
    double price_;
    RateOptions options_;
    mutable Covariances inverses_;
};

}  // namespace

RateEvaluation weighted_sum_rate(const MacModel& mac, const Vector& powers,
                                 const RateOptions& options, const std::vector<ComplexMatrix>* start)
{
    Ascent ascent(mac, powers, -1, 0.0, options);
    auto r = ascent.run(start);

    RateEvaluation out;
    out.value = r.value;
    out.iterations = r.iterations;
    out.residual = r.residual;
    out.marginals.resize(mac.users());
    for (int u = 0; u < mac.users(); ++u) out.marginals[u] = max_eigenvalue(r.grad[u]);

    // Successive decoding: order[K-1] is decoded first, order[0] last.
    const int nr = mac.rx_antennas();
    out.rates = Vector::Zero(mac.users());
    ComplexMatrix s = ComplexMatrix::Identity(nr, nr);
    double previous = 0.0;
    for (int j = 0; j < mac.users(); ++j) {
        const int u = mac.order().order[j];
        if (powers[u] > 0.0) s.noalias() += mac.channel(u) * r.q[u] * mac.channel(u).adjoint();
        const double current = log2_det_hpd(s);
        out.rates[u] = std::max(current - previous, 0.0);
        previous = current;
    }
    out.covariances = std::move(r.q);
    return out;
}

namespace {

double optimal_value(const MacModel& mac, Vector powers, int user, double p,
                     const RateOptions& options, const std::vector<ComplexMatrix>* start)
{
    powers[user] = p;
    return weighted_sum_rate(mac, powers, options, start).value;
}

}  // namespace

double marginal_rate(const MacModel& mac, const Vector& powers, int user, const RateOptions& options)
{
    if (user < 0 || user >= mac.users()) throw InvalidInput("user index out of range");
    const double p = powers[user];
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("power must be finite and nonnegative");
    const double h = 1e-4 * std::max(p, 1.0);
    if (!(h > 0.0) || p + h == p) throw SolverError("finite-difference step underflow");

    const auto base = weighted_sum_rate(mac, powers, options);
    const auto* warm = &base.covariances;
    if (p >= h) {
        const double up = optimal_value(mac, powers, user, p + h, options, warm);
        const double down = optimal_value(mac, powers, user, p - h, options, warm);
        return (up - down) / (2.0 * h);
    }
    const double r0 = optimal_value(mac, powers, user, p, options, warm);
    const double r1 = optimal_value(mac, powers, user, p + h, options, warm);
    const double r2 = optimal_value(mac, powers, user, p + 2.0 * h, options, warm);
    return (-3.0 * r0 + 4.0 * r1 - r2) / (2.0 * h);
}

double inverse_marginal(const MacModel& mac, const Vector& powers, int user, double target,
                        const RateOptions& options)
{
    if (!(target > 0.0)) throw InvalidInput("marginal-rate target must be positive");
    constexpr double cap = 1e9;
    Vector p = powers;
    auto g = [&](double x) {
        p[user] = x;
        return marginal_rate(mac, p, user, options);
    };
    if (target >= g(0.0)) return 0.0;

    double lo = 0.0;
    double hi = 1.0;
    while (g(hi) >= target) {
        lo = hi;
        hi *= 2.0;
        if (hi > cap) throw SolverError("inverse marginal bracket exceeded the power cap", hi);
    }
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) >= target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

PriceResponse power_at_price(const MacModel& mac, const Vector& powers, int user, double price,
                             const RateOptions& options, const std::vector<ComplexMatrix>* start)
{
    if (user < 0 || user >= mac.users()) throw InvalidInput("user index out of range");
    if (!(price > 0.0)) throw InvalidInput("power price must be positive");
    Ascent ascent(mac, powers, user, price, options);
    auto r = ascent.run(start);
    PriceResponse out;
    out.power = std::max(r.q[user].trace().real(), 0.0);
    out.iterations = r.iterations;
    out.covariances = std::move(r.q);
    return out;
}

}  // namespace ehmac
