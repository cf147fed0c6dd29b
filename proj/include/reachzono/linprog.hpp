#ifndef REACHZONO_LINPROG_HPP_
#define REACHZONO_LINPROG_HPP_

/**
 * @file linprog.hpp
 * @brief Dense bounded-variable primal simplex for small linear programs.
 *
 * Programs have the form
 *
 *     maximize    objective . x
 *     subject to  a x <= b,   lower <= x <= upper
 *
 * where bounds may be infinite. The solver runs a two-phase tableau simplex
 * with Bland's rule for both the entering and the leaving variable, so
 * degenerate programs (frequent for zonotopes with zero generator entries)
 * cannot cycle.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace reachzono
{

inline constexpr double kDefaultLpTolerance = 1e-9;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct LinearProgram
{
    Eigen::VectorXd objective;
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    std::size_t num_variables() const { return static_cast<std::size_t>(objective.size()); }
    std::size_t num_constraints() const { return static_cast<std::size_t>(a.rows()); }

    void validate() const
    {
        const auto n = objective.size();
        if (a.rows() != b.size())
            throw DimensionError("linear program: constraint matrix has " + std::to_string(a.rows()) +
                                 " rows but right-hand side has " + std::to_string(b.size()));
        if (a.rows() > 0 && a.cols() != n)
            throw DimensionError("linear program: constraint matrix has " + std::to_string(a.cols()) +
                                 " columns, expected " + std::to_string(n));
        if (lower.size() != n || upper.size() != n)
            throw DimensionError("linear program: bound vectors must match the objective length");
        if (!objective.allFinite() || !a.allFinite() || !b.allFinite())
            throw InvalidArgument("linear program: objective and constraints must be finite");
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] == kInfinity || upper[j] == -kInfinity)
                throw InvalidArgument("linear program: invalid bound on variable " + std::to_string(j));
    }
};

enum class LpStatus
{
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure
};

inline const char* to_string(LpStatus s)
{
    switch (s)
    {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

struct LpOutcome
{
    LpStatus status = LpStatus::NumericalFailure;
    std::optional<Eigen::VectorXd> solution;
    std::optional<double> objective_value;
};

namespace detail
{

class BoundedSimplex
{
public:
    BoundedSimplex(const LinearProgram& lp, double tol) : lp_(lp), tol_(tol)
    {
        n_ = lp.num_variables();
        m_ = lp.num_constraints();
        max_iterations_ = 50 * (n_ + m_) + 50;
    }

    LpOutcome run()
    {
        for (std::size_t j = 0; j < n_; ++j)
            if (lp_.lower[j] > lp_.upper[j])
                return {LpStatus::Infeasible, std::nullopt, std::nullopt};

        setup();

        if (num_artificial_ > 0)
        {
            std::vector<double> cost(cols_, 0.0);
            for (std::size_t k = 0; k < num_artificial_; ++k)
                cost[n_ + m_ + k] = -1.0;
            const auto phase1 = iterate(cost);
            if (phase1 == LpStatus::NumericalFailure)
                return {LpStatus::NumericalFailure, std::nullopt, std::nullopt};
            refresh_basic_values();
            double infeasibility = 0.0;
            for (std::size_t k = 0; k < num_artificial_; ++k)
                infeasibility += std::abs(x_[n_ + m_ + k]);
            if (infeasibility > tol_)
                return {LpStatus::Infeasible, std::nullopt, std::nullopt};
            // Pin artificials at zero; basic ones stay in place with a
            // degenerate [0, 0] range.
            for (std::size_t k = 0; k < num_artificial_; ++k)
            {
                const auto j = n_ + m_ + k;
                lo_[j] = 0.0;
                hi_[j] = 0.0;
                if (row_of_[j] < 0)
                {
                    x_[j] = 0.0;
                    state_[j] = State::AtLower;
                }
            }
        }

        std::vector<double> cost(cols_, 0.0);
        for (std::size_t j = 0; j < n_; ++j)
            cost[j] = lp_.objective[static_cast<Eigen::Index>(j)];
        const auto phase2 = iterate(cost);
        if (phase2 == LpStatus::NumericalFailure)
            return {LpStatus::NumericalFailure, std::nullopt, std::nullopt};
        if (phase2 == LpStatus::Unbounded)
            return {LpStatus::Unbounded, std::nullopt, std::nullopt};

        refresh_basic_values();
        Eigen::VectorXd sol(static_cast<Eigen::Index>(n_));
        for (std::size_t j = 0; j < n_; ++j)
            sol[static_cast<Eigen::Index>(j)] = std::clamp(x_[j], lo_[j], hi_[j]);

        if (m_ > 0)
        {
            const Eigen::VectorXd residual = lp_.a * sol - lp_.b;
            if (residual.maxCoeff() > tol_)
                return {LpStatus::NumericalFailure, std::nullopt, std::nullopt};
        }
        const double value = lp_.objective.dot(sol);
        return {LpStatus::Optimal, std::move(sol), value};
    }

private:
    enum class State : unsigned char
    {
        Basic,
        AtLower,
        AtUpper,
        Free
    };

    static constexpr double kPivotTolerance = 1e-11;
    static constexpr double kDualTolerance = 1e-11;

    double& at(std::size_t row, std::size_t col) { return tab_[row * cols_ + col]; }
    double at(std::size_t row, std::size_t col) const { return tab_[row * cols_ + col]; }

    void setup()
    {
        lo_.assign(n_ + m_, 0.0);
        hi_.assign(n_ + m_, kInfinity);
        x_.assign(n_ + m_, 0.0);
        state_.assign(n_ + m_, State::AtLower);

        for (std::size_t j = 0; j < n_; ++j)
        {
            const auto jj = static_cast<Eigen::Index>(j);
            lo_[j] = lp_.lower[jj];
            hi_[j] = lp_.upper[jj];
            if (std::isfinite(lo_[j]))
            {
                x_[j] = lo_[j];
                state_[j] = State::AtLower;
            }
            else if (std::isfinite(hi_[j]))
            {
                x_[j] = hi_[j];
                state_[j] = State::AtUpper;
            }
            else
            {
                x_[j] = 0.0;
                state_[j] = State::Free;
            }
        }

        std::vector<double> residual(m_);
        num_artificial_ = 0;
        for (std::size_t i = 0; i < m_; ++i)
        {
            double r = lp_.b[static_cast<Eigen::Index>(i)];
            for (std::size_t j = 0; j < n_; ++j)
                r -= lp_.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * x_[j];
            residual[i] = r;
            if (r < 0.0)
                ++num_artificial_;
        }

        cols_ = n_ + m_ + num_artificial_;
        lo_.resize(cols_, 0.0);
        hi_.resize(cols_, kInfinity);
        x_.resize(cols_, 0.0);
        state_.resize(cols_, State::AtLower);
        row_of_.assign(cols_, -1);
        basis_.assign(m_, 0);
        orig_.assign(m_ * cols_, 0.0);
        tab_.assign(m_ * cols_, 0.0);

        std::size_t next_artificial = n_ + m_;
        for (std::size_t i = 0; i < m_; ++i)
        {
            for (std::size_t j = 0; j < n_; ++j)
                orig_[i * cols_ + j] = lp_.a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            orig_[i * cols_ + n_ + i] = 1.0;

            std::size_t basic = n_ + i;
            double sign = 1.0;
            if (residual[i] < 0.0)
            {
                basic = next_artificial++;
                orig_[i * cols_ + basic] = -1.0;
                sign = -1.0;
            }
            for (std::size_t j = 0; j < cols_; ++j)
                at(i, j) = sign * orig_[i * cols_ + j];
            basis_[i] = basic;
            row_of_[basic] = static_cast<int>(i);
            state_[basic] = State::Basic;
            x_[basic] = std::abs(residual[i]);
        }
    }

    /// Recompute basic values from the nonbasic ones. The slack columns of
    /// the tableau hold the current basis inverse.
    void refresh_basic_values()
    {
        std::vector<double> rhs(m_);
        for (std::size_t i = 0; i < m_; ++i)
        {
            double r = lp_.b[static_cast<Eigen::Index>(i)];
            for (std::size_t j = 0; j < cols_; ++j)
                if (row_of_[j] < 0 && x_[j] != 0.0)
                    r -= orig_[i * cols_ + j] * x_[j];
            rhs[i] = r;
        }
        for (std::size_t i = 0; i < m_; ++i)
        {
            double v = 0.0;
            for (std::size_t k = 0; k < m_; ++k)
                v += at(i, n_ + k) * rhs[k];
            x_[basis_[i]] = v;
        }
    }

    LpStatus iterate(const std::vector<double>& cost)
    {
        while (true)
        {
            if (iterations_++ > max_iterations_)
                return LpStatus::NumericalFailure;

            // Bland: lowest-index improving column.
            std::size_t entering = cols_;
            double direction = 0.0;
            for (std::size_t j = 0; j < cols_; ++j)
            {
                if (state_[j] == State::Basic || lo_[j] == hi_[j])
                    continue;
                double d = cost[j];
                for (std::size_t i = 0; i < m_; ++i)
                {
                    const double t = at(i, j);
                    if (t != 0.0)
                        d -= cost[basis_[i]] * t;
                }
                const bool can_increase = state_[j] != State::AtUpper;
                const bool can_decrease = state_[j] != State::AtLower;
                if (d > kDualTolerance && can_increase)
                {
                    entering = j;
                    direction = 1.0;
                    break;
                }
                if (d < -kDualTolerance && can_decrease)
                {
                    entering = j;
                    direction = -1.0;
                    break;
                }
            }
            if (entering == cols_)
                return LpStatus::Optimal;

            double step = direction > 0 ? hi_[entering] - x_[entering] : x_[entering] - lo_[entering];
            std::size_t leave_row = m_;
            bool leave_at_upper = false;
            for (std::size_t i = 0; i < m_; ++i)
            {
                const double t = at(i, entering);
                if (std::abs(t) <= kPivotTolerance)
                    continue;
                const std::size_t var = basis_[i];
                const double rate = -direction * t;
                double limit;
                bool hits_upper;
                if (rate < 0.0)
                {
                    if (!std::isfinite(lo_[var]))
                        continue;
                    limit = (x_[var] - lo_[var]) / -rate;
                    hits_upper = false;
                }
                else
                {
                    if (!std::isfinite(hi_[var]))
                        continue;
                    limit = (hi_[var] - x_[var]) / rate;
                    hits_upper = true;
                }
                limit = std::max(limit, 0.0);
                if (limit < step || (limit == step && leave_row < m_ && var < basis_[leave_row]))
                {
                    step = limit;
                    leave_row = i;
                    leave_at_upper = hits_upper;
                }
            }

            if (!std::isfinite(step))
                return LpStatus::Unbounded;

            for (std::size_t i = 0; i < m_; ++i)
            {
                const double t = at(i, entering);
                if (t != 0.0)
                    x_[basis_[i]] -= direction * step * t;
            }
            x_[entering] += direction * step;

            if (leave_row == m_)
            {
                // Bound flip, no basis change.
                if (direction > 0)
                {
                    x_[entering] = hi_[entering];
                    state_[entering] = State::AtUpper;
                }
                else
                {
                    x_[entering] = lo_[entering];
                    state_[entering] = State::AtLower;
                }
                continue;
            }

            const std::size_t leaving = basis_[leave_row];
            x_[leaving] = leave_at_upper ? hi_[leaving] : lo_[leaving];
            state_[leaving] = leave_at_upper ? State::AtUpper : State::AtLower;
            row_of_[leaving] = -1;
            pivot(leave_row, entering);
            basis_[leave_row] = entering;
            row_of_[entering] = static_cast<int>(leave_row);
            state_[entering] = State::Basic;
        }
    }

    void pivot(std::size_t row, std::size_t col)
    {
        const double p = at(row, col);
        double* prow = &tab_[row * cols_];
        for (std::size_t j = 0; j < cols_; ++j)
            prow[j] /= p;
        prow[col] = 1.0;
        for (std::size_t i = 0; i < m_; ++i)
        {
            if (i == row)
                continue;
            double* r = &tab_[i * cols_];
            const double f = r[col];
            if (f == 0.0)
                continue;
            for (std::size_t j = 0; j < cols_; ++j)
                r[j] -= f * prow[j];
            r[col] = 0.0;
        }
    }

    const LinearProgram& lp_;
    double tol_;
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::size_t cols_ = 0;
    std::size_t num_artificial_ = 0;
    std::size_t iterations_ = 0;
    std::size_t max_iterations_ = 0;
    std::vector<double> tab_;
    std::vector<double> orig_;
    std::vector<double> lo_, hi_, x_;
    std::vector<State> state_;
    std::vector<std::size_t> basis_;
    std::vector<int> row_of_;
};

} // namespace detail

/// Solve `lp`. Optimal solutions satisfy every constraint within `tol`;
/// Infeasible means phase one could not bring the total violation below `tol`.
inline LpOutcome solve(const LinearProgram& lp, double tol = kDefaultLpTolerance)
{
    lp.validate();
    if (!(tol >= 0.0))
        throw InvalidArgument("linear program: tolerance must be nonnegative");
    return detail::BoundedSimplex(lp, tol).run();
}

} // namespace reachzono

#endif
