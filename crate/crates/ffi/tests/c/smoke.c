#include <math.h>
#include <stdio.h>
#include "sgl_mixing.h"

int main(void) {
    const double p[4] = {0.7, 0.3, 0.4, 0.6};
    const size_t set[2] = {0, 1};
    SglKernel *k = NULL;
    SglCertificate *c = NULL;
    SglContraction r;
    if (sgl_kernel_new(2, p, &k) != SGL_STATUS_OK) return 1;
    if (sgl_doeblin_certificate(k, set, 2, &c) != SGL_STATUS_OK) return 2;
    if (fabs(sgl_certificate_delta(c) - 0.7) > 1e-15) return 3;
    if (sgl_contraction_check(k, c, &r) != SGL_STATUS_OK || !r.holds) return 4;
    char *text = sgl_certificate_format(c);
    printf("%s", text);
    sgl_string_free(text);
    sgl_certificate_free(c);
    sgl_kernel_free(k);

    char msg[256];
    if (sgl_kernel_new(2, NULL, &k) != SGL_STATUS_NULL_POINTER) return 5;
    if (sgl_last_error_message(msg, sizeof msg) == 0) return 6;
    printf("error = %s\n", msg);
    return 0;
}
