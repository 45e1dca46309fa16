#include <math.h>
#include <stdio.h>
#include "vsl_ffi.h"

int main(void) {
    VslModel *m = NULL;
    if (vsl_model_reference(&m) != VSL_STATUS_OK) return 1;
    VslConstants c;
    if (vsl_model_constants(m, &c) != VSL_STATUS_OK) return 2;
    if (fabs(c.k_1 - 1.0 / 55.0) > 1e-15) return 3;

    double g = 0.0;
    if (vsl_model_discharge(m, 1.0, &g) != VSL_STATUS_INVALID_ARGUMENT) return 4;
    char msg[128];
    if (vsl_last_error_message(msg, sizeof msg) == 0) return 5;

    VslEquilibrium eq[2];
    size_t n = 0;
    if (vsl_model_open_loop_equilibria(m, 1.0, c.v_1, eq, 2, &n) != VSL_STATUS_OK) return 6;
    /* Inflow capped at exactly C: the k_1 state and the congested state coexist. */
    if (n != 2 || eq[0].basin != VSL_BASIN_AT_MOST_K1 || eq[1].regime != VSL_REGIME_CONGESTED) return 7;
    vsl_model_free(m);

    printf("vsl %s ok\n", vsl_version());
    return 0;
}
