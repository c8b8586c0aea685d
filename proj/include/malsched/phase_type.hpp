#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "malsched/rng.hpp"

namespace malsched {

// Absorption time of a finite CTMC: initial distribution p over K transient
// states and sub-generator Q (off-diagonal >= 0, strictly negative diagonal,
// row sums <= 0). Exit rate from state u is -(row sum of Q row u).
// Exponential, hyperexponential and Erlang sizes are all special cases.
class PhaseTypeDist {
  public:
    PhaseTypeDist(std::vector<double> initial, std::vector<std::vector<double>> sub_generator) {
        const std::size_t K = initial.size();
        if (K == 0 || sub_generator.size() != K)
            throw std::invalid_argument("phase type: p and Q dimensions disagree");
        p_ = Eigen::VectorXd(K);
        Q_ = Eigen::MatrixXd(K, K);
        double psum = 0.0;
        for (std::size_t u = 0; u < K; ++u) {
            if (initial[u] < 0.0) throw std::invalid_argument("phase type: p entries must be >= 0");
            psum += initial[u];
            p_(static_cast<Eigen::Index>(u)) = initial[u];
            if (sub_generator[u].size() != K)
                throw std::invalid_argument("phase type: Q must be square");
            double row_sum = 0.0;
            for (std::size_t v = 0; v < K; ++v) {
                double q = sub_generator[u][v];
                if (u != v && q < 0.0)
                    throw std::invalid_argument("phase type: off-diagonal Q entries must be >= 0");
                if (u == v && q >= 0.0)
                    throw std::invalid_argument("phase type: diagonal Q entries must be < 0");
                row_sum += q;
                Q_(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = q;
            }
            if (row_sum > 1e-12)
                throw std::invalid_argument("phase type: Q row sums must be <= 0");
            exit_rate_.push_back(std::max(0.0, -row_sum));
        }
        if (std::abs(psum - 1.0) > 1e-12)
            throw std::invalid_argument("phase type: p must sum to 1");

        lu_ = Q_.partialPivLu();
        // mean = -p Q^{-1} 1, via linear solve
        Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(K));
        Eigen::VectorXd x = lu_.solve(ones);
        if (!((Q_ * x - ones).norm() <= 1e-8 * std::sqrt(static_cast<double>(K))))
            throw std::invalid_argument("phase type: Q is singular");
        mean_ = -p_.dot(x);
        if (!(mean_ > 0.0)) throw std::invalid_argument("phase type: mean must be > 0");
    }

    static PhaseTypeDist exponential(double rate) {
        if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
        return PhaseTypeDist({1.0}, {{-rate}});
    }

    static PhaseTypeDist hyperexponential(const std::vector<double>& probs,
                                          const std::vector<double>& rates) {
        if (probs.size() != rates.size() || probs.empty())
            throw std::invalid_argument("hyperexp: probs and rates must have equal size");
        std::vector<std::vector<double>> Q(probs.size(), std::vector<double>(probs.size(), 0.0));
        for (std::size_t i = 0; i < rates.size(); ++i) {
            if (!(rates[i] > 0.0)) throw std::invalid_argument("hyperexp: rates must be > 0");
            Q[i][i] = -rates[i];
        }
        return PhaseTypeDist(probs, Q);
    }

    static PhaseTypeDist erlang(int phases, double rate_per_phase) {
        if (phases < 1) throw std::invalid_argument("erlang: need >= 1 phase");
        if (!(rate_per_phase > 0.0)) throw std::invalid_argument("erlang: rate must be > 0");
        std::size_t K = static_cast<std::size_t>(phases);
        std::vector<double> p(K, 0.0);
        p[0] = 1.0;
        std::vector<std::vector<double>> Q(K, std::vector<double>(K, 0.0));
        for (std::size_t u = 0; u < K; ++u) {
            Q[u][u] = -rate_per_phase;
            if (u + 1 < K) Q[u][u + 1] = rate_per_phase;
        }
        return PhaseTypeDist(p, Q);
    }

    std::size_t num_phases() const { return static_cast<std::size_t>(p_.size()); }
    double mean() const { return mean_; }
    const Eigen::VectorXd& initial() const { return p_; }
    const Eigen::MatrixXd& sub_generator() const { return Q_; }

    // Solves y Q = rhs (row-vector system), used by the fluid stationary point.
    Eigen::VectorXd solve_left(const Eigen::VectorXd& rhs) const {
        return Q_.transpose().partialPivLu().solve(rhs);
    }

    struct Sample {
        double value;
        int initial_phase;
    };

    // Absorption time of the chain started from p.
    Sample sample(RngStream& rng) const {
        const std::size_t K = num_phases();
        std::size_t u = (K == 1) ? 0 : pick_initial(rng);
        const std::size_t first = u;
        double t = 0.0;
        for (;;) {
            double total_rate = -Q_(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(u));
            t += rng.exponential(total_rate);
            // choose the jump target: transient v != u or absorption
            double x = rng.u01() * total_rate;
            double acc = exit_rate_[u];
            if (x < acc) break;
            std::size_t next = u;
            for (std::size_t v = 0; v < K; ++v) {
                if (v == u) continue;
                acc += Q_(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
                if (x < acc) {
                    next = v;
                    break;
                }
            }
            if (next == u) break;  // fp rounding at the top of the row
            u = next;
        }
        return {t, static_cast<int>(first)};
    }

  private:
    std::size_t pick_initial(RngStream& rng) const {
        double x = rng.u01();
        for (Eigen::Index i = 0; i < p_.size(); ++i) {
            x -= p_(i);
            if (x < 0.0) return static_cast<std::size_t>(i);
        }
        return static_cast<std::size_t>(p_.size() - 1);
    }

    Eigen::VectorXd p_;
    Eigen::MatrixXd Q_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    std::vector<double> exit_rate_;
    double mean_ = 0.0;
};

}  // namespace malsched
