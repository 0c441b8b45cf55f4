/* Decay of X0 = sin(x) d_x on the flat torus through the C API.
 *   cc -I crates/ffi/include crates/ffi/examples/decay.c \
 *      target/release/libkvflow_ffi.a -lm -lpthread -ldl -o decay */
#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "kvflow.h"

static int fail(const char *what) {
  char msg[256];
  kv_last_error_message(msg, sizeof msg);
  fprintf(stderr, "%s: %s\n", what, msg);
  return 1;
}

int main(void) {
  const size_t res[2] = {32, 32};
  KvManifold *m = NULL;
  KvOperator *op = NULL;
  KvField *x0 = NULL, *xf = NULL;
  if (kv_manifold_new("flat_torus_t2", res, 2, 0.0, &m) != KV_STATUS_OK) return fail("manifold");
  if (kv_operator_new(m, &op) != KV_STATUS_OK) return fail("operator");

  size_t n = kv_operator_dofs(op);
  double *data = calloc(n, sizeof *data);
  for (size_t i = 0; i < res[0]; i++)
    for (size_t j = 0; j < res[1]; j++) data[2 * (i * res[1] + j)] = sin(2.0 * M_PI * i / res[0]);
  if (kv_field_from_data(m, data, n, &x0) != KV_STATUS_OK) return fail("field");

  KvRunSummary s;
  if (kv_flow_run(m, op, x0, "main", "rk4", 1.0, 0.5, &xf, &s) != KV_STATUS_OK) return fail("run");
  printf("t = %g after %zu steps, frakL %.6e -> %.6e (ratio %.6f, e^-4 = %.6f)\n", s.t_final, s.steps,
         s.frak_l_initial, s.frak_l_final, s.frak_l_final / s.frak_l_initial, exp(-4.0));

  free(data);
  kv_field_free(xf);
  kv_field_free(x0);
  kv_operator_free(op);
  kv_manifold_free(m);
  return 0;
}
