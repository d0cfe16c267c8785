/* Minimal consumer of the geokalman C API.
 *
 * Build (from the workspace root, after `cargo build -p geokalman-ffi`):
 *   cc crates/geokalman-ffi/examples/smoke.c \
 *      -Icrates/geokalman-ffi/include -Ltarget/debug \
 *      -l:libgeokalman_ffi.a -lm -lpthread -ldl -o smoke
 */
#include <assert.h>
#include <stdio.h>

#include "geokalman.h"

int main(void) {
    GkManifold *sphere = gk_manifold_sphere(2);
    assert(sphere != NULL);
    assert(gk_manifold_dim(sphere) == 2);
    assert(gk_manifold_ambient_len(sphere) == 3);

    double p[3] = {1.0, 0.0, 0.0};
    double x[3] = {0.0, 0.3, -0.4};
    double q[3], back[3], dist;
    assert(gk_exp(sphere, p, 3, x, 3, q, 3) == GK_STATUS_OK);
    assert(gk_log(sphere, p, 3, q, 3, back, 3) == GK_STATUS_OK);
    assert(gk_distance(sphere, p, 3, q, 3, &dist) == GK_STATUS_OK);
    printf("moved %.3f along the sphere and back\n", dist);

    /* Buffer lengths are validated on every call. */
    assert(gk_exp(sphere, p, 2, x, 3, q, 3) == GK_STATUS_BAD_LENGTH);
    gk_manifold_free(sphere);

    /* Run a benchmark experiment and write its CSV files. */
    GkStatus status = gk_run_experiment("sphere", 50, 0.01, 3, 0.99, "./out-c");
    if (status != GK_STATUS_OK) {
        fprintf(stderr, "experiment failed: %s\n", gk_status_message(status));
        return 1;
    }
    printf("geokalman %s: experiment written to ./out-c\n", gk_version());
    return 0;
}
