#include <math.h>
#include <string.h>

#include "psd_bundle.h"

int psdb_smoke(double *total) {
    const double a[9] = {1, 0, 0, 0, 1, 0, 0, 0, 0};
    const double b[4] = {1, 0, 0, 4};
    PsdbMatrix *ma = NULL;
    PsdbMatrix *mb = NULL;
    PsdbMetricSpec *spec = NULL;
    PsdbGdResult res;

    if (psdb_matrix_new(a, 3, 0.0, &ma) != PSDB_STATUS_OK) return 1;
    if (psdb_matrix_new(b, 2, 0.0, &mb) != PSDB_STATUS_OK) return 2;
    if (psdb_spec_new("geodesic", "geo", NULL, &spec) != PSDB_STATUS_OK) return 3;
    if (psdb_gd(ma, mb, spec, &res) != PSDB_STATUS_OK) return 4;
    if (fabs(res.total - log(4.0)) > 1e-12 || res.mode != PSDB_MODE_CLOSED_FORM) return 5;

    const double bad[4] = {1, 2, 2, 1};
    PsdbMatrix *mbad = NULL;
    if (psdb_matrix_new(bad, 2, 0.0, &mbad) != PSDB_STATUS_DOMAIN || mbad != NULL) return 6;
    if (strlen(psdb_last_error_message()) == 0) return 7;
    if (psdb_gd(NULL, mb, spec, &res) != PSDB_STATUS_NULL_POINTER) return 8;

    if (strcmp(psdb_version(), "") == 0) return 9;
    *total = res.total;
    psdb_spec_free(spec);
    psdb_matrix_free(ma);
    psdb_matrix_free(mb);
    return 0;
}
