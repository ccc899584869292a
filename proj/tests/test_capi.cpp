// Exercises the shared library through its C header only.
#include "ahlfors/ahlfors.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <vector>

namespace {

int failures = 0;

void expect(bool ok, const char* what) {
  if (!ok) {
    std::printf("FAIL %s (last error: %s)\n", what, ahlfors_last_error());
    ++failures;
  }
}

}  // namespace

int main() {
  std::printf("ahlfors %s\n", ahlfors_version());

  ahlfors_space* sp = nullptr;
  expect(ahlfors_space_line(10.0, 301, &sp) == AHLFORS_OK, "line space");
  const size_t n = ahlfors_space_size(sp);
  expect(n == 301, "size");
  expect(ahlfors_space_dim(sp) == 1.0, "dim");
  double xy[2], w = 0;
  int ad = 0;
  expect(ahlfors_space_point(sp, 150, xy, &ad, &w) == AHLFORS_OK && ad == 1 && std::abs(xy[0]) < 1e-12,
         "middle point");
  expect(ahlfors_space_point(sp, n, xy, &ad, &w) == AHLFORS_INVALID_ARGUMENT, "out of range point");
  expect(std::strlen(ahlfors_last_error()) > 0, "error message kept");

  ahlfors_ai* ai = nullptr;
  expect(ahlfors_ai_build(sp, 0, 0, 12, &ai) == AHLFORS_OK, "ai build");
  const size_t K = ahlfors_ai_scale_count(ai);
  expect(K > 10, "scale count");
  std::vector<double> ones(n, 1.0), out(n), g(n);
  expect(ahlfors_ai_apply_s(ai, K / 3, ones.data(), out.data()) == AHLFORS_OK, "apply s");
  expect(std::abs(out[n / 2] - 1.0) < 1e-12, "S 1 = 1 in the middle");

  ahlfors_kernel *kJ = nullptr, *kD = nullptr, *kI = nullptr;
  expect(ahlfors_kernel_build(ai, AHLFORS_KERNEL_BESSEL, 0.05, &kJ) == AHLFORS_OK, "bessel");
  expect(ahlfors_kernel_build(ai, AHLFORS_KERNEL_FRAC_DERIV, 0.05, &kD) == AHLFORS_OK, "frac deriv");
  expect(ahlfors_kernel_build(ai, AHLFORS_KERNEL_RIESZ, 1.5, &kI) == AHLFORS_INVALID_ARGUMENT, "riesz alpha >= N");
  expect(ahlfors_kernel_entry(kJ, 10, 12) > 0, "kernel entry");

  std::vector<unsigned char> valid(n);
  expect(ahlfors_kernel_apply(kD, ones.data(), out.data(), valid.data()) == AHLFORS_OK, "apply D");
  bool zero = true;
  for (size_t i = 0; i < n; ++i)
    if (valid[i] && out[i] != 0.0) zero = false;
  expect(zero, "D 1 = 0");

  double est = 0;
  expect(ahlfors_contraction_norm(kJ, kD, 2.0, 1, &est) == AHLFORS_OK && est < 1.0, "contraction < 1");

  std::vector<double> g0(n), f(n);
  for (size_t i = 0; i < n; ++i) {
    const double x = -10.0 + 20.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    g0[i] = std::abs(x) < 3 ? std::exp(1 - 1 / (1 - x * x / 9)) : 0.0;
  }
  // f = J g0 through the kernel's apply. Rows outside the guard come back flagged and
  // non-finite, so zero-fill them, invert, and check that J maps the result back onto f.
  expect(ahlfors_kernel_apply(kJ, g0.data(), f.data(), valid.data()) == AHLFORS_OK, "apply J");
  for (size_t i = 0; i < n; ++i)
    if (!valid[i]) f[i] = 0.0;
  std::vector<double> nan_f(n, std::nan(""));
  expect(ahlfors_invert_bessel(kJ, kD, nan_f.data(), 1e-12, g.data(), nullptr) == AHLFORS_INVALID_ARGUMENT,
         "non-finite f refused");
  size_t iters = 0;
  expect(ahlfors_invert_bessel(kJ, kD, f.data(), 1e-12, g.data(), &iters) == AHLFORS_OK && iters > 0, "invert");
  std::vector<double> Jg(n);
  expect(ahlfors_kernel_apply(kJ, g.data(), Jg.data(), valid.data()) == AHLFORS_OK, "apply J again");
  double err = 0, ref = 0, near = 0, mid = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!valid[i]) continue;
    err += (Jg[i] - f[i]) * (Jg[i] - f[i]);
    ref += f[i] * f[i];
    near += (g[i] - g0[i]) * (g[i] - g0[i]);
    mid += g0[i] * g0[i];
  }
  expect(std::sqrt(err / ref) < 1e-9, "J inverts the solve");
  std::printf("interior |g - g0| / |g0| = %.3g\n", std::sqrt(near / mid));

  char* text = nullptr;
  expect(ahlfors_describe_config(R"({"space":{"kind":"gasket","level":6,"dilations":3}})", &text) == AHLFORS_OK &&
             std::strstr(text, "points: 1701") != nullptr,
         "describe");
  ahlfors_string_free(text);
  expect(ahlfors_describe_config(R"({"alphas":[2]})", &text) == AHLFORS_CONFIG_ERROR, "config error status");
  expect(std::strstr(ahlfors_last_error(), "alphas[0]") != nullptr, "config error names field");
  int code = -1;
  char* failing = nullptr;
  expect(ahlfors_run_config(R"({"experiments":[]})", nullptr, -1, &code, &failing) == AHLFORS_OK && code == 0,
         "empty run");
  ahlfors_string_free(failing);
  expect(std::strcmp(ahlfors_status_string(AHLFORS_NOT_CONTRACTIVE), "not-contractive") == 0, "status string");

  ahlfors_kernel_free(kJ);
  ahlfors_kernel_free(kD);
  ahlfors_ai_free(ai);
  ahlfors_space_free(sp);
  expect(ahlfors_space_from_json("{\"kind\":\"torus\"}", &sp) != AHLFORS_OK, "bad descriptor");

  std::printf("%s (%d failures)\n", failures ? "FAILED" : "passed", failures);
  return failures ? 1 : 0;
}
