#include <stdio.h>
#include <string.h>
#include "dapc.h"

#define CHECK(call)                                                         \
    do {                                                                    \
        DapcStatus s_ = (call);                                             \
        if (s_ != DAPC_STATUS_OK) {                                         \
            fprintf(stderr, "%s: %d %s\n", #call, s_, dapc_last_error_message()); \
            return 1;                                                       \
        }                                                                   \
    } while (0)

int main(void) {
    DapcChannel *ch = NULL;
    DapcReduction *red = NULL;
    DapcCodebook *cb = NULL;
    size_t t = 0, m = 0;
    double eps, r0, lo, hi;
    char *json = NULL;

    CHECK(dapc_capacity_bounds(1.0, 0.0, &lo, &hi));
    if (lo != 0.25 || hi != 1.5) return 2;

    CHECK(dapc_channel_identity(8, 1.0, 0.5, &ch));
    CHECK(dapc_reduction_new(ch, &red));
    CHECK(dapc_reduction_rank(red, &t));
    CHECK(dapc_packing_radius(1.0, 0.4, 1.0, 0.0, t, &eps, &r0));
    CHECK(dapc_codebook_greedy(ch, red, 3.0, 3.0, r0, 500, 11, &cb));
    CHECK(dapc_codebook_size(cb, &m));

    DapcDecoderConfig cfg = {1.0, 0.4, 1.0, 0.0};
    CHECK(dapc_estimate_errors(cb, ch, red, &cfg, 100, 3, 10, &json));
    if (strstr(json, "type1_max") == NULL) return 3;
    dapc_string_free(json);

    if (dapc_codebook_greedy(ch, red, 4.0, 3.0, r0, 500, 11, &cb) != DAPC_STATUS_INVALID_ARGUMENT) return 4;
    if (strlen(dapc_last_error_message()) == 0) return 5;

    printf("t=%zu m=%zu version=%s\n", t, m, dapc_version());
    dapc_codebook_free(cb);
    dapc_reduction_free(red);
    dapc_channel_free(ch);
    return 0;
}
