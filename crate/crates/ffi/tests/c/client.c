#include <math.h>
#include <stdio.h>

#include "spectral_flow.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    enum SfStatus s_ = (call);                                             \
    if (s_ != SF_STATUS_OK) {                                              \
      fprintf(stderr, "%s: %d %s\n", #call, s_, sf_last_error_message()); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  size_t dims[] = {2, 1};
  double weights[] = {0.5, 2.0};
  double start[] = {-1.0, 1.0, -3.0};
  double end[] = {1.0, 2.0, 4.0};
  SfAlgebra *alg = NULL;
  SfElement *a = NULL, *b = NULL;
  SfPath *path = NULL;
  double flow = 0.0;

  CHECK(sf_algebra_blocks_new(dims, weights, 2, &alg));
  CHECK(sf_element_diagonal_new(alg, start, 3, &a));
  CHECK(sf_element_diagonal_new(alg, end, 3, &b));
  CHECK(sf_path_affine_new(a, b, &path));
  CHECK(sf_spectral_flow(path, SF_METHOD_WINDING, &flow));
  printf("%.9f\n", flow);

  sf_path_free(path);
  sf_element_free(a);
  sf_element_free(b);
  sf_algebra_free(alg);
  return fabs(flow - 2.5) < 1e-6 ? 0 : 1;
}
