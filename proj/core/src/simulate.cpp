#include "sparsepath/simulate.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include "sparsepath/errors.hpp"

namespace sparsepath {

namespace {

int pool_size(const SimConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* env = std::getenv("SPARSEPATH_THREADS")) {
        int cap = std::atoi(env);
        if (cap > 0) hw = std::min(hw, cap);
    }
    return std::max(1, std::min(hw, cfg.replicates));
}

}  // namespace

Eigen::VectorXd sim_true_beta(const SimConfig& cfg) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(cfg.p);
    for (int j = 0; j < cfg.n_pos && j < cfg.p; ++j) beta[j] = cfg.signal;
    for (int j = cfg.n_pos; j < cfg.n_pos + cfg.n_neg && j < cfg.p; ++j) beta[j] = -cfg.signal;
    return beta;
}

GlmProblem sim_problem(const SimConfig& cfg, std::uint64_t replicate_seed) {
    std::mt19937_64 rng(replicate_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(cfg.n, cfg.p);
    for (int i = 0; i < cfg.n; ++i)
        for (int j = 0; j < cfg.p; ++j) x(i, j) = gauss(rng);
    Eigen::VectorXd beta = sim_true_beta(cfg);
    Eigen::VectorXd z = x * beta;
    Eigen::VectorXd y(cfg.n);
    switch (cfg.loss) {
        case Loss::Gaussian:
            for (int i = 0; i < cfg.n; ++i) y[i] = z[i] + cfg.noise * gauss(rng);
            break;
        case Loss::Logistic: {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            for (int i = 0; i < cfg.n; ++i) y[i] = unif(rng) < 1.0 / (1.0 + std::exp(-z[i])) ? 1.0 : 0.0;
            break;
        }
        case Loss::Poisson: {
            for (int i = 0; i < cfg.n; ++i) {
                double mu = std::exp(std::min(z[i], 30.0));
                std::poisson_distribution<long> pois(mu);
                y[i] = static_cast<double>(pois(rng));
            }
            break;
        }
    }
    int pcols = cfg.p + (cfg.intercept ? 1 : 0);
    Eigen::MatrixXd design(cfg.n, pcols);
    int off = 0;
    if (cfg.intercept) {
        design.col(0).setOnes();
        off = 1;
    }
    design.rightCols(cfg.p) = x;
    std::vector<int> penalized(cfg.p);
    for (int j = 0; j < cfg.p; ++j) penalized[j] = j + off;
    return {std::move(design), std::move(y), cfg.loss, std::move(penalized)};
}

std::vector<SimRecord> run_simulation(const SimConfig& cfg) {
    const int netas = static_cast<int>(cfg.etas.size());
    std::vector<SimRecord> records(static_cast<size_t>(cfg.replicates) * netas);
    std::atomic<int> next{0};

    auto worker = [&]() {
        for (;;) {
            int rep = next.fetch_add(1);
            if (rep >= cfg.replicates) return;
            std::uint64_t rseed = cfg.seed + static_cast<std::uint64_t>(rep);
            GlmProblem prob = sim_problem(cfg, rseed);
            Eigen::VectorXd truth = sim_true_beta(cfg);
            int off = cfg.intercept ? 1 : 0;
            int n_true = cfg.n_pos + cfg.n_neg;
            int n_neg_truth = cfg.p - n_true;

            for (int k = 0; k < netas; ++k) {
                SimRecord rec;
                rec.seed = rseed;
                rec.loss = cfg.loss;
                rec.eta = cfg.etas[static_cast<size_t>(k)];
                auto t0 = std::chrono::steady_clock::now();
                Eigen::VectorXd selected = Eigen::VectorXd::Zero(cfg.p);
                try {
                    Penalty pen(cfg.family, cfg.etas[static_cast<size_t>(k)]);
                    PathOptions opts;
                    opts.rtol = cfg.rtol;
                    opts.rho_min = cfg.rho_min;
                    opts.max_predictors = cfg.max_predictors;
                    SolutionPath path = follow_path(prob, pen, opts);
                    rec.terminated_by = path.meta.terminated_by;
                    SelectionResult sel = select_model(prob, pen, path, cfg.criterion);
                    Eigen::VectorXd best = path.beta_at(sel.sample_index);
                    selected = best.segment(off, cfg.p);
                } catch (const SeparationError&) {
                    rec.terminated_by = "separation";
                } catch (const AllInadmissibleError&) {
                    rec.terminated_by += "+all_inadmissible";
                }
                auto t1 = std::chrono::steady_clock::now();
                rec.runtime_s = std::chrono::duration<double>(t1 - t0).count();

                int fp = 0, fn = 0;
                for (int j = 0; j < cfg.p; ++j) {
                    bool sel_nz = selected[j] != 0.0;
                    bool true_nz = truth[j] != 0.0;
                    if (sel_nz && !true_nz) ++fp;
                    if (!sel_nz && true_nz) ++fn;
                }
                rec.fpr = n_neg_truth > 0 ? static_cast<double>(fp) / n_neg_truth : 0.0;
                rec.fnr = n_true > 0 ? static_cast<double>(fn) / n_true : 0.0;
                rec.mse = std::sqrt((selected - truth).squaredNorm() / cfg.p);
                records[static_cast<size_t>(rep) * netas + k] = std::move(rec);
            }
        }
    };

    int nthreads = pool_size(cfg);
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(nthreads));
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return records;
}

}  // namespace sparsepath
