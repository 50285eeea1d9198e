#include <stdio.h>
#include "psicv.h"

int main(void) {
    PsicvMixture *f = NULL;
    PsicvSample *s = NULL;
    double est, g, psi;
    if (psicv_mixture_catalog(1, &f) != PSICV_STATUS_OK) {
        fprintf(stderr, "%s\n", psicv_last_error());
        return 1;
    }
    psicv_mixture_sample(f, 500, 42, &s);
    psicv_mixture_psi(f, &psi);
    if (psicv_psi_hat(s, &est, &g) != PSICV_STATUS_OK) {
        fprintf(stderr, "%s\n", psicv_last_error());
        return 1;
    }
    printf("estimate=%.6f g=%.6f truth=%.6f\n", est, g, psi);
    psicv_sample_free(s);
    psicv_mixture_free(f);
    return 0;
}
