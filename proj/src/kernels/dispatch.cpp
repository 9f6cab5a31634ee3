// Backend selection. Resolved once, on first use, for the whole process:
// results must not depend on when a code path first runs.

#include <cstdlib>
#include <string>

#include "lbv/errors.hpp"
#include "lbv/kernels/kernels.hpp"

namespace lbv::kernels {

#if defined(__x86_64__) || defined(_M_X64)
const Ops* avx2_ops_impl();  // defined in avx2.cpp
const Ops* avx2_ops() { return avx2_ops_impl(); }
#else
const Ops* avx2_ops() { return nullptr; }
#endif

namespace {

const Ops& resolve() {
  const char* env = std::getenv("LBV_KERNEL");
  std::string want = env ? env : "auto";
  if (want == "scalar") return scalar_ops();
  if (want == "avx2") {
    const Ops* v = avx2_ops();
    if (!v) throw ValidationError("LBV_KERNEL=avx2 but this CPU/build has no AVX2+FMA backend");
    return *v;
  }
  if (want != "auto")
    throw ValidationError("LBV_KERNEL must be one of scalar|avx2|auto, got '" + want + "'");
  const Ops* v = avx2_ops();
  return v ? *v : scalar_ops();
}

}  // namespace

const Ops& active() {
  static const Ops& ops = resolve();
  return ops;
}

const char* active_name() { return active().name; }

}  // namespace lbv::kernels
