#pragma once

#include <string>
#include <vector>

#include "sxt/grid.hpp"

namespace sxt {

enum class Similarity { SSD, NCC };

struct RegConfig {
    Similarity similarity = Similarity::SSD;
    double lambda = 0.1;          // smoothness weight on the diffusion term
    int pyramid_levels = 3;       // downsample x2 per level
    int max_iterations = 100;     // per level
    double step_size = 2.0;       // initial max node displacement per iteration
    double backtrack_factor = 0.5;
    double tolerance = 1e-6;      // relative objective decrease
    double prefilter_sigma = 0.0; // optional Gaussian on both inputs before registering

    void validate() const;
};

struct TraceRow {
    int level;      // 0 = finest
    int iteration;
    double objective;
};

struct RegResult2 {
    DisplacementField2 field;
    double objective = 0.0;
    std::vector<TraceRow> trace;
    bool converged = false;
};

struct RegResult3 {
    DisplacementField3 field;
    double objective = 0.0;
    std::vector<TraceRow> trace;
    bool converged = false;
};

// Minimizes Sim(warp(m, phi), f) + lambda * |grad phi|^2 by gradient descent
// with backtracking line search, coarse-to-fine over a pyramid. The returned
// field lives on the finest (input) grid.
RegResult2 register_2d(const ScalarImage& moving, const ScalarImage& fixed, const RegConfig& cfg);

// 3D analogue; default similarity NCC (prior and evidence have different
// intensity scales). Throws "no evidence" when v_bp is all zero. `init`, when
// non-null, seeds the coarsest pyramid level (field on the v_prior grid).
RegResult3 register_3d_prior(const ScalarVolume& v_prior, const ScalarVolume& v_bp,
                             const RegConfig& cfg,
                             const DisplacementField3* init = nullptr);

// Objective and its analytic gradient at phi; exposed for testing.
struct Objective2 {
    double value;
    DisplacementField2 gradient;
};
struct Objective3 {
    double value;
    DisplacementField3 gradient;
};
Objective2 eval_objective(const ScalarImage& m, const ScalarImage& f,
                          const DisplacementField2& phi, const RegConfig& cfg);
Objective3 eval_objective(const ScalarVolume& m, const ScalarVolume& f,
                          const DisplacementField3& phi, const RegConfig& cfg);

// Pyramid plumbing, shared with tests.
ScalarImage downsample2(const ScalarImage& img);
ScalarVolume downsample2(const ScalarVolume& vol);
DisplacementField2 upsample_field(const DisplacementField2& f, int width, int height);
DisplacementField3 upsample_field(const DisplacementField3& f, int nx, int ny, int nz);

}  // namespace sxt
