#pragma once

#include "deepcox/data.hpp"

#include <span>

namespace deepcox {

/// Linear Cox model h(x) = beta . x fitted by Newton-Raphson.
struct LinearCoxModel {
    Vector beta;
    bool converged = false;
    int iterations = 0;
    double final_log_likelihood = 0.0;
    /// Set when |beta| ran past the divergence cap (monotone likelihood).
    bool diverged = false;
};

struct CoxFitOptions {
    int max_iter = 100;
    double tol = 1e-9;
    /// Largest admissible |beta_k| before the fit is declared divergent.
    double beta_cap = 50.0;
    int max_halvings = 40;
};

/// Log partial likelihood with Breslow ties. Throws NoEventsError.
double cox_log_likelihood(const Vector& beta, const Matrix& x, const SurvivalDataset& ds,
                          const SortedSurvivalView& view);
double cox_log_likelihood(const Vector& beta, const SurvivalDataset& ds, const SortedSurvivalView& view);

struct CoxDerivatives {
    double log_likelihood = 0.0;
    Vector gradient;
    /// Negative Hessian (observed information).
    Matrix information;
};

CoxDerivatives cox_derivatives(const Vector& beta, const Matrix& x, const SurvivalDataset& ds,
                               const SortedSurvivalView& view);

/// Fits on the rows of `x`; `ds` supplies times and events.
LinearCoxModel fit_cph(const Matrix& x, const SurvivalDataset& ds, const CoxFitOptions& options = {});
LinearCoxModel fit_cph(const SurvivalDataset& ds, const CoxFitOptions& options = {});

double predict_linear_risk(const LinearCoxModel& model, std::span<const double> x);
Vector predict_linear_risks(const LinearCoxModel& model, const Matrix& x);

/// beta_t (i - j): the linear model's recommender, the same for every patient.
double cph_recommender(const LinearCoxModel& model, std::size_t treatment_index, int i, int j);

} // namespace deepcox
