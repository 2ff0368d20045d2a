#include <stdio.h>
#include <string.h>
#include "ap3lab.h"

#define CHECK(cond)                                                  \
    do {                                                             \
        if (!(cond)) {                                               \
            fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                \
        }                                                            \
    } while (0)

int main(void) {
    int64_t members[] = {0, 2, 4, 6};
    Ap3Set *set = NULL;
    CHECK(ap3_set_new(11, members, 4, &set) == AP3_STATUS_OK);

    Ap3Count count;
    CHECK(ap3_count_naive(set, &count) == AP3_STATUS_OK);
    CHECK(count.total == 8 && count.trivial == 4 && count.nontrivial == 4);

    Ap3Run run;
    CHECK(ap3_longest_ap(set, &run) == AP3_STATUS_OK);
    CHECK(run.start == 0 && run.step == 2 && run.length == 4);

    char *json = NULL;
    CHECK(ap3_set_to_json(set, &json) == AP3_STATUS_OK);
    CHECK(strcmp(json, "{\"p\":11,\"members\":[0,2,4,6]}") == 0);
    ap3_string_free(json);
    ap3_set_free(set);

    Ap3Set *bad = NULL;
    CHECK(ap3_set_new(12, members, 4, &bad) == AP3_STATUS_INVALID_ARGUMENT);
    CHECK(bad == NULL);
    CHECK(strstr(ap3_last_error_message(), "not a prime") != NULL);

    printf("ok\n");
    return 0;
}
