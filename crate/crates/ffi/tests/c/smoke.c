#include <math.h>
#include <stdio.h>
#include <string.h>

#include "lrb.h"

static const char *CONFIG =
    "{\"family\": {\"name\": \"stable_half\", \"c\": 1.0}, \"horizon\": 1.0,"
    " \"terminal\": {\"atoms\": [[0.5, 0.4], [2.0, 0.6]]}}";

int main(void) {
    LrbModel *m = NULL;
    if (lrb_model_from_json(CONFIG, &m) != LRB_STATUS_OK) {
        fprintf(stderr, "from_json: %s\n", lrb_last_error());
        return 1;
    }
    double mean = 0.0;
    if (lrb_model_terminal_mean(m, 0.0, 0.0, &mean) != LRB_STATUS_OK || fabs(mean - 1.4) > 1e-12) {
        return 2;
    }
    double bad = 0.0;
    if (lrb_model_psi(m, 5.0, 0.1, &bad) != LRB_STATUS_DOMAIN || lrb_last_error() == NULL) {
        return 3;
    }
    double grid[3] = {0.0, 0.5, 1.0};
    double values[6];
    if (lrb_model_sample_paths(m, grid, 3, 2, 7, values, 6) != LRB_STATUS_OK) {
        return 4;
    }
    for (int i = 0; i < 2; i++) {
        double z = values[3 * i + 2];
        if (values[3 * i] != 0.0 || !(z == 0.5 || z == 2.0)) {
            return 5;
        }
    }
    lrb_model_free(m);
    printf("ok %s\n", lrb_version());
    return 0;
}
