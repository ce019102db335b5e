#include "deepcox/coxlinear.hpp"

#include "deepcox/errors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace deepcox {

namespace {

void check_shapes(const Vector& beta, const Matrix& x, const SurvivalDataset& ds,
                  const SortedSurvivalView& view) {
    if (beta.size() != x.cols()) throw std::invalid_argument("beta does not match covariate count");
    if (x.rows() != static_cast<Eigen::Index>(ds.size()) || view.size() != ds.size()) {
        throw std::invalid_argument("view or design matrix does not match dataset");
    }
    if (ds.num_events() == 0) throw NoEventsError();
}

} // namespace

CoxDerivatives cox_derivatives(const Vector& beta, const Matrix& x, const SurvivalDataset& ds,
                               const SortedSurvivalView& view) {
    check_shapes(beta, x, ds, view);
    const Eigen::Index p = x.cols();
    const Vector eta = x * beta;
    const double shift = eta.maxCoeff();
    const auto& events = ds.events();

    CoxDerivatives out;
    out.gradient = Vector::Zero(p);
    out.information = Matrix::Zero(p, p);

    // Risk-set sums accumulate while walking from the latest time backwards.
    double s0 = 0.0;
    Vector s1 = Vector::Zero(p);
    Matrix s2 = Matrix::Zero(p, p);
    for (const auto& group : view.tie_groups) {
        int deaths = 0;
        Vector x_deaths = Vector::Zero(p);
        for (std::size_t k = group.begin; k < group.end; ++k) {
            const auto i = static_cast<Eigen::Index>(view.permutation[k]);
            const double w = std::exp(eta[i] - shift);
            s0 += w;
            s1.noalias() += w * x.row(i).transpose();
            s2.noalias() += w * x.row(i).transpose() * x.row(i);
            if (events[i] == 1) {
                ++deaths;
                out.log_likelihood += eta[i];
                x_deaths += x.row(i).transpose();
            }
        }
        if (deaths == 0) continue;
        const Vector mean = s1 / s0;
        out.log_likelihood -= deaths * (std::log(s0) + shift);
        out.gradient += x_deaths - deaths * mean;
        out.information += deaths * (s2 / s0 - mean * mean.transpose());
    }
    return out;
}

double cox_log_likelihood(const Vector& beta, const Matrix& x, const SurvivalDataset& ds,
                          const SortedSurvivalView& view) {
    check_shapes(beta, x, ds, view);
    const Vector eta = x * beta;
    const double shift = eta.maxCoeff();
    const auto& events = ds.events();
    double ll = 0.0;
    double s0 = 0.0;
    for (const auto& group : view.tie_groups) {
        int deaths = 0;
        for (std::size_t k = group.begin; k < group.end; ++k) {
            const auto i = static_cast<Eigen::Index>(view.permutation[k]);
            s0 += std::exp(eta[i] - shift);
            if (events[i] == 1) {
                ++deaths;
                ll += eta[i];
            }
        }
        if (deaths > 0) ll -= deaths * (std::log(s0) + shift);
    }
    return ll;
}

double cox_log_likelihood(const Vector& beta, const SurvivalDataset& ds, const SortedSurvivalView& view) {
    return cox_log_likelihood(beta, ds.covariates(), ds, view);
}

LinearCoxModel fit_cph(const Matrix& x, const SurvivalDataset& ds, const CoxFitOptions& options) {
    if (ds.num_events() == 0) throw NoEventsError();
    if (x.cols() < 1) throw std::invalid_argument("linear Cox fit needs at least one covariate");
    const auto view = sort_view(ds);

    LinearCoxModel model;
    model.beta = Vector::Zero(x.cols());
    auto current = cox_derivatives(model.beta, x, ds, view);

    for (int iter = 1; iter <= options.max_iter; ++iter) {
        model.iterations = iter;
        Eigen::LDLT<Matrix> ldlt(current.information);
        const auto& diag = ldlt.vectorD();
        const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                              !(diag.minCoeff() > 1e-12 * std::max(diag.cwiseAbs().maxCoeff(), 1.0));
        if (singular) {
            // At beta = 0 the information is the risk-set covariance of x, so a
            // singular matrix there means collinear or constant covariates. Later
            // it means the likelihood is flattening out while beta runs off.
            if (iter == 1) {
                throw SingularHessianError(
                    "Hessian of the partial likelihood is numerically singular "
                    "(collinear or constant covariates)");
            }
            model.diverged = true;
            break;
        }
        Vector step = ldlt.solve(current.gradient);

        // Halve the Newton step until the likelihood stops decreasing.
        Vector candidate = model.beta + step;
        double candidate_ll = cox_log_likelihood(candidate, x, ds, view);
        int halvings = 0;
        while ((!std::isfinite(candidate_ll) || candidate_ll < current.log_likelihood) &&
               halvings < options.max_halvings) {
            step *= 0.5;
            candidate = model.beta + step;
            candidate_ll = cox_log_likelihood(candidate, x, ds, view);
            ++halvings;
        }
        model.beta = candidate;
        current = cox_derivatives(model.beta, x, ds, view);

        if (model.beta.cwiseAbs().maxCoeff() > options.beta_cap) {
            model.diverged = true;
            model.converged = false;
            break;
        }
        if (step.cwiseAbs().maxCoeff() < options.tol) {
            model.converged = true;
            break;
        }
    }
    model.final_log_likelihood = current.log_likelihood;
    return model;
}

LinearCoxModel fit_cph(const SurvivalDataset& ds, const CoxFitOptions& options) {
    return fit_cph(ds.covariates(), ds, options);
}

double predict_linear_risk(const LinearCoxModel& model, std::span<const double> x) {
    if (static_cast<Eigen::Index>(x.size()) != model.beta.size()) {
        throw std::invalid_argument("covariate length does not match the model");
    }
    return model.beta.dot(Eigen::Map<const Vector>(x.data(), model.beta.size()));
}

Vector predict_linear_risks(const LinearCoxModel& model, const Matrix& x) {
    if (x.cols() != model.beta.size()) throw std::invalid_argument("covariate width does not match the model");
    return x * model.beta;
}

double cph_recommender(const LinearCoxModel& model, std::size_t treatment_index, int i, int j) {
    if (static_cast<Eigen::Index>(treatment_index) >= model.beta.size()) {
        throw std::invalid_argument("treatment index outside the coefficient vector");
    }
    return model.beta[static_cast<Eigen::Index>(treatment_index)] * static_cast<double>(i - j);
}

} // namespace deepcox
