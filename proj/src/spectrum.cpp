#include "foldfinder/spectrum.hpp"

namespace foldfinder {

StabilityResult stability_index(const Problem& p, const Field& u, double tol) {
    require_cone_interior(u, kEnergyConeFloor, "stability_index");
    StabilityResult out;
    out.lambda_used = rayleigh_nl(p, u);
    const Eigenpair pair = smallest_eigenpair(hessian_operator(p, u, out.lambda_used), tol);
    out.delta = pair.value;
    out.residual = pair.residual;
    out.eigenfield = Field(u.components(), pair.vector);
    return out;
}

StabilityResult stability_index(const Problem& p, const Field& u) {
    return stability_index(p, u, 1e-10 * p.grid().stencil_scale());
}

double stability_tolerance(const Problem& p) { return 1e-9 * p.grid().stencil_scale(); }

bool is_stable(const Problem& p, const StabilityResult& result) { return result.delta >= -stability_tolerance(p); }

bool is_stable(const Problem& p, const Field& u) { return is_stable(p, stability_index(p, u)); }

}  // namespace foldfinder
