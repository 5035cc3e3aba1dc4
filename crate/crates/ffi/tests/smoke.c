#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "thermobeam.h"

#define CHECK(call)                                                      \
    do {                                                                 \
        TbStatus s_ = (call);                                            \
        if (s_ != TB_STATUS_OK) {                                        \
            fprintf(stderr, "%s -> %d: %s\n", #call, s_, tb_last_error()); \
            return 1;                                                    \
        }                                                                \
    } while (0)

int main(void) {
    TbSystem *sys = NULL;
    CHECK(tb_system_new("mesh.n = 6\nbcs = \"dirichlet\"\n", &sys));
    size_t n = 0;
    CHECK(tb_system_dim(sys, &n));
    double a = 0.0;
    CHECK(tb_spectral_abscissa(sys, &a));

    double *re = malloc(n * sizeof *re), *im = malloc(n * sizeof *im);
    size_t len = 0;
    CHECK(tb_eigenvalues(sys, re, im, n, &len));
    if (len != n || re[0] != a || !(a < 0.0)) return 2;

    double *u = calloc(n, sizeof *u);
    for (size_t i = 0; i < n; i++) u[i] = sin((double)i);
    double e0 = 0.0, e1 = 0.0, rate = 0.0;
    CHECK(tb_energy(sys, u, n, &e0));
    CHECK(tb_simulate(sys, u, n, 0.05, 1.0, &e1, &rate));
    if (!(e1 < e0)) return 3;

    if (tb_system_new("params.bogus = 1", &sys) != TB_STATUS_CONFIG) return 4;
    printf("dim=%zu abscissa=%.6e E0=%.6e E1=%.6e\n", n, a, e0, e1);
    free(re);
    free(im);
    free(u);
    tb_system_free(sys);
    return 0;
}
