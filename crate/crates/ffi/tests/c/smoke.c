#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "xaitax.h"

static double linear(const double *row, size_t len, void *user_data) {
    const double *w = user_data;
    double s = 0.0;
    for (size_t i = 0; i < len; i++) s += w[i] * row[i];
    return s;
}

#define CHECK(cond) do { if (!(cond)) { fprintf(stderr, "failed: %s (%s)\n", #cond, xtax_last_error() ? xtax_last_error() : ""); return 1; } } while (0)

int main(void) {
    double t = 0.0;
    CHECK(xtax_total_two(0.5, 0.5, &t) == XTAX_STATUS_OK && t == 0.75);
    CHECK(xtax_total_two(1.5, 0.5, &t) == XTAX_STATUS_OUT_OF_RANGE && xtax_last_error() != NULL);

    double w[3] = {1.0, -2.0, 0.5};
    double x[3] = {1.0, 1.0, 1.0};
    double bg[6] = {0.0, 0.0, 0.0, 2.0, 2.0, 2.0};
    double phi[3], phi0;
    CHECK(xtax_shapley_kernel(linear, w, x, 3, bg, 2, 0, 7, phi, 3, &phi0) == XTAX_STATUS_OK);
    for (int j = 0; j < 3; j++) CHECK(fabs(phi[j]) < 1e-9);
    x[0] = 3.0;
    CHECK(xtax_shapley_exact(linear, w, x, 3, bg, 2, phi, 3, &phi0) == XTAX_STATUS_OK);
    CHECK(fabs(phi[0] - 2.0) < 1e-9 && fabs(phi0 + 0.5) < 1e-9);

    XtaxSvm *svm = NULL;
    CHECK(xtax_svm_train_iris(&svm) == XTAX_STATUS_OK);
    size_t p = 0, k = 0, cls = 9;
    CHECK(xtax_svm_shape(svm, &p, &k) == XTAX_STATUS_OK && p == 4 && k == 3);
    double setosa[4] = {5.1, 3.5, 1.4, 0.2};
    CHECK(xtax_svm_predict_class(svm, setosa, 4, &cls) == XTAX_STATUS_OK && cls == 0);
    char *json = NULL;
    CHECK(xtax_svm_to_json(svm, &json) == XTAX_STATUS_OK && json != NULL);
    XtaxSvm *copy = NULL;
    CHECK(xtax_svm_from_json(json, &copy) == XTAX_STATUS_OK);
    xtax_string_free(json);
    xtax_svm_free(copy);
    xtax_svm_free(svm);
    printf("ok %s\n", xtax_version());
    return 0;
}
