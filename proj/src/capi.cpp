#include "ahlfors/ahlfors.h"

#include "ahlfors/approx_id.hpp"
#include "ahlfors/experiment.hpp"
#include "ahlfors/kernels.hpp"
#include "ahlfors/operators.hpp"
#include "ahlfors/space.hpp"

#include <cstring>
#include <string>

struct ahlfors_space {
  ahlfors::SpacePtr space;
};
struct ahlfors_ai {
  ahlfors::AICollection ai;
};
struct ahlfors_kernel {
  ahlfors::PotentialKernel kernel;
};

namespace {

thread_local std::string last_error;

ahlfors_status record(ahlfors_status s, const char* what) {
  last_error = what;
  return s;
}

// Runs body, mapping library errors to status codes.
template <class F>
ahlfors_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return AHLFORS_OK;
  } catch (const ahlfors::Error& e) {
    return record(static_cast<ahlfors_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::bad_alloc&) {
    return record(AHLFORS_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return record(AHLFORS_INTERNAL_ERROR, e.what());
  }
}

void need(const void* p, const char* name) {
  if (!p) ahlfors::fail(ahlfors::ErrorCode::invalid_argument, std::string(name) + " is NULL");
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ahlfors::Vector read_vector(const double* f, std::size_t n) {
  return Eigen::Map<const ahlfors::Vector>(f, static_cast<Eigen::Index>(n));
}

}  // namespace

extern "C" {

const char* ahlfors_version(void) { return "0.1.0"; }

const char* ahlfors_status_string(ahlfors_status status) {
  if (status == AHLFORS_OK) return "ok";
  if (status == AHLFORS_INTERNAL_ERROR) return "internal_error";
  if (status >= AHLFORS_INVALID_ARGUMENT && status <= AHLFORS_IO_ERROR)
    return ahlfors::to_string(static_cast<ahlfors::ErrorCode>(static_cast<int>(status)));
  return "unknown_status";
}

const char* ahlfors_last_error(void) { return last_error.c_str(); }

void ahlfors_set_threads(int threads) { ahlfors::set_thread_count(threads); }

ahlfors_status ahlfors_space_line(double half_length, int n_points, ahlfors_space** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ahlfors_space{ahlfors::build_line_space(half_length, n_points)};
  });
}

ahlfors_status ahlfors_space_gasket(int level, int dilations, ahlfors_space** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ahlfors_space{ahlfors::build_gasket_space(level, dilations)};
  });
}

ahlfors_status ahlfors_space_from_json(const char* json, ahlfors_space** out) {
  return guarded([&] {
    need(json, "json");
    need(out, "out");
    *out = new ahlfors_space{ahlfors::build_space(ahlfors::parse_space_descriptor(json))};
  });
}

void ahlfors_space_free(ahlfors_space* space) { delete space; }

size_t ahlfors_space_size(const ahlfors_space* space) { return space ? space->space->size() : 0; }

double ahlfors_space_dim(const ahlfors_space* space) { return space ? space->space->dim() : 0.0; }

ahlfors_status ahlfors_space_point(const ahlfors_space* space, size_t i, double* coords, int* ambient_dim,
                                   double* weight) {
  return guarded([&] {
    need(space, "space");
    const auto& sp = *space->space;
    if (i >= sp.size()) ahlfors::fail(ahlfors::ErrorCode::invalid_argument, "point index out of range");
    if (coords)
      for (int a = 0; a < sp.ambient_dim(); ++a) coords[a] = sp.coord(i, a);
    if (ambient_dim) *ambient_dim = sp.ambient_dim();
    if (weight) *weight = sp.weight(i);
  });
}

ahlfors_status ahlfors_space_export_csv(const ahlfors_space* space, const char* path) {
  return guarded([&] {
    need(space, "space");
    need(path, "path");
    ahlfors::export_points_csv(*space->space, path);
  });
}

ahlfors_status ahlfors_ai_build(const ahlfors_space* space, double t_min, double t_max, double points_per_decade,
                                ahlfors_ai** out) {
  return guarded([&] {
    need(space, "space");
    need(out, "out");
    const ahlfors::ScaleGrid grid = (t_min > 0 && t_max > 0)
                                        ? ahlfors::ScaleGrid::log_spaced(t_min, t_max, points_per_decade)
                                        : ahlfors::default_scale_grid(*space->space, points_per_decade);
    *out = new ahlfors_ai{ahlfors::AICollection(space->space, grid)};
  });
}

void ahlfors_ai_free(ahlfors_ai* ai) { delete ai; }

size_t ahlfors_ai_scale_count(const ahlfors_ai* ai) { return ai ? ai->ai.scale_count() : 0; }

double ahlfors_ai_scale(const ahlfors_ai* ai, size_t k) {
  return (ai && k < ai->ai.scale_count()) ? ai->ai.t(k) : 0.0;
}

ahlfors_status ahlfors_ai_apply_s(const ahlfors_ai* ai, size_t k, const double* f, double* out) {
  return guarded([&] {
    need(ai, "ai");
    need(f, "f");
    need(out, "out");
    if (k >= ai->ai.scale_count()) ahlfors::fail(ahlfors::ErrorCode::invalid_argument, "scale index out of range");
    const std::size_t n = ai->ai.space().size();
    const ahlfors::Vector r = ai->ai.apply_s(k, read_vector(f, n));
    std::memcpy(out, r.data(), n * sizeof(double));
  });
}

ahlfors_status ahlfors_kernel_build(const ahlfors_ai* ai, ahlfors_kernel_kind kind, double alpha,
                                    ahlfors_kernel** out) {
  return guarded([&] {
    need(ai, "ai");
    need(out, "out");
    ahlfors::KernelKind k;
    switch (kind) {
      case AHLFORS_KERNEL_BESSEL: k = ahlfors::KernelKind::bessel; break;
      case AHLFORS_KERNEL_RIESZ: k = ahlfors::KernelKind::riesz; break;
      case AHLFORS_KERNEL_FRAC_DERIV: k = ahlfors::KernelKind::frac_deriv; break;
      default: ahlfors::fail(ahlfors::ErrorCode::invalid_argument, "unknown kernel kind");
    }
    *out = new ahlfors_kernel{ahlfors::build_kernel(ai->ai, k, alpha)};
  });
}

void ahlfors_kernel_free(ahlfors_kernel* kernel) { delete kernel; }

double ahlfors_kernel_entry(const ahlfors_kernel* kernel, size_t i, size_t j) {
  if (!kernel || i >= kernel->kernel.size() || j >= kernel->kernel.size()) return 0.0;
  return kernel->kernel(i, j);
}

ahlfors_status ahlfors_kernel_apply(const ahlfors_kernel* kernel, const double* f, double* out,
                                    unsigned char* valid_out) {
  return guarded([&] {
    need(kernel, "kernel");
    need(f, "f");
    need(out, "out");
    const auto& k = kernel->kernel;
    const ahlfors::GridFunction in(read_vector(f, k.size()));
    ahlfors::GridFunction r;
    switch (k.kind) {
      case ahlfors::KernelKind::bessel: r = ahlfors::apply_bessel(k, in); break;
      case ahlfors::KernelKind::riesz: r = ahlfors::apply_riesz(k, in); break;
      case ahlfors::KernelKind::frac_deriv: r = ahlfors::apply_frac_derivative(k, in); break;
    }
    std::memcpy(out, r.values.data(), k.size() * sizeof(double));
    if (valid_out)
      for (std::size_t i = 0; i < k.size(); ++i) valid_out[i] = r.is_valid(i) ? 1 : 0;
  });
}

ahlfors_status ahlfors_contraction_norm(const ahlfors_kernel* bessel, const ahlfors_kernel* frac_deriv, double p,
                                        uint64_t seed, double* estimate) {
  return guarded([&] {
    need(bessel, "bessel");
    need(frac_deriv, "frac_deriv");
    need(estimate, "estimate");
    ahlfors::ContractionOptions opt;
    opt.seed = seed;
    *estimate = ahlfors::contraction_norm(bessel->kernel, frac_deriv->kernel, p, opt).estimate;
  });
}

ahlfors_status ahlfors_invert_bessel(const ahlfors_kernel* bessel, const ahlfors_kernel* frac_deriv, const double* f,
                                     double tol, double* g, size_t* iterations) {
  return guarded([&] {
    need(bessel, "bessel");
    need(frac_deriv, "frac_deriv");
    need(f, "f");
    need(g, "g");
    const std::size_t n = bessel->kernel.size();
    const auto r =
        ahlfors::invert_bessel(bessel->kernel, frac_deriv->kernel, ahlfors::GridFunction(read_vector(f, n)), tol);
    std::memcpy(g, r.g.values.data(), n * sizeof(double));
    if (iterations) *iterations = r.iterations;
  });
}

ahlfors_status ahlfors_run_config(const char* json, const char* output_dir_override, int64_t seed_override,
                                  int* exit_code, char** failing) {
  return guarded([&] {
    need(json, "json");
    need(exit_code, "exit_code");
    ahlfors::ExperimentConfig cfg = ahlfors::parse_config(json);
    if (output_dir_override) cfg.output_dir = output_dir_override;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    const ahlfors::RunResult r = ahlfors::run_experiments(cfg);
    *exit_code = r.exit_code;
    if (failing) {
      std::string joined;
      for (const auto& f : r.failing) joined += f + "\n";
      *failing = copy_string(joined);
    }
  });
}

ahlfors_status ahlfors_describe_config(const char* json, char** text) {
  return guarded([&] {
    need(json, "json");
    need(text, "text");
    *text = copy_string(ahlfors::describe(ahlfors::parse_config(json)));
  });
}

void ahlfors_string_free(char* s) { delete[] s; }

}  // extern "C"
