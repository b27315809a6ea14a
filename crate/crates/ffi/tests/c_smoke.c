#include <stdio.h>
#include <string.h>
#include "tenperf.h"

int main(void) {
    TpFormat *f = NULL;
    if (tp_format_parse("3x2x2", &f) != TP_STATUS_OK) return 10;
    size_t dims[3];
    if (tp_format_dims(f, dims, 3) != TP_STATUS_OK) return 11;
    if (dims[0] != 2 || dims[1] != 2 || dims[2] != 3) return 12;

    TpBounds b;
    if (tp_bounds(f, &b) != TP_STATUS_OK || b.lower != 3 || b.upper != 4 || b.q != 2) return 13;

    TpCertificate *c = NULL;
    if (tp_certify(f, &c) != TP_STATUS_OK) return 14;
    TpVerdict v;
    int64_t rank = 0;
    if (tp_certificate_verdict(c, &v) != TP_STATUS_OK || v != TP_VERDICT_PERFECT_CERTIFIED) return 15;
    if (tp_certificate_rank(c, &rank) != TP_STATUS_OK || rank != 12) return 16;
    char *json = NULL;
    if (tp_certificate_json(c, &json) != TP_STATUS_OK || strstr(json, "PERFECT_CERTIFIED") == NULL) return 17;
    tp_string_free(json);
    tp_certificate_free(c);
    tp_format_free(f);

    TpFormat *bad = NULL;
    if (tp_format_parse("1x5x7", &bad) != TP_STATUS_NOT_CANONICAL || bad != NULL) return 18;
    if (strlen(tp_last_error()) == 0) return 19;
    printf("ok %s\n", tp_version());
    return 0;
}
