#ifndef MEANDIM_COMMON_HPP
#define MEANDIM_COMMON_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace meandim {

// Exit-code classes for errors surfaced through the CLI.
enum class ErrorKind {
  Parse = 2,       // malformed input
  Gate = 3,        // precondition / hypothesis gate failure
  Exhausted = 4,   // search cap or retry budget exceeded
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string what) : std::runtime_error(std::move(what)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

struct HorizonExceeded : Error {
  explicit HorizonExceeded(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct NonCommuting : Error {
  explicit NonCommuting(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct NotACover : Error {
  explicit NotACover(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct Infeasible : Error {
  explicit Infeasible(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct SearchCapExceeded : Error {
  explicit SearchCapExceeded(const std::string& w) : Error(ErrorKind::Exhausted, w) {}
};
struct InsufficientRows : Error {
  explicit InsufficientRows(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct CaseBoundViolated : Error {
  explicit CaseBoundViolated(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct InvalidPattern : Error {
  explicit InvalidPattern(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct AnchorConflict : Error {
  explicit AnchorConflict(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct PreconditionFailed : Error {
  explicit PreconditionFailed(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct GeneralPositionExhausted : Error {
  explicit GeneralPositionExhausted(const std::string& w) : Error(ErrorKind::Exhausted, w) {}
};
struct RegionOverlap : Error {
  explicit RegionOverlap(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct OrderBoundViolated : Error {
  explicit OrderBoundViolated(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct SeparationFailed : Error {
  explicit SeparationFailed(const std::string& w) : Error(ErrorKind::Exhausted, w) {}
};
struct RationalAlpha : Error {
  explicit RationalAlpha(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct ResolutionTooCoarse : Error {
  explicit ResolutionTooCoarse(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct HeightMismatch : Error {
  explicit HeightMismatch(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct NotEquivariant : Error {
  explicit NotEquivariant(const std::string& w) : Error(ErrorKind::Gate, w) {}
};
struct GateFailed : Error {
  GateFailed(std::string gate, std::string certificate)
      : Error(ErrorKind::Gate, gate + ": " + certificate), gate_(std::move(gate)),
        certificate_(std::move(certificate)) {}
  const std::string& gate() const { return gate_; }
  const std::string& certificate() const { return certificate_; }

 private:
  std::string gate_;
  std::string certificate_;
};
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorKind::Parse, w) {}
};

// Default tolerances; all overridable at call sites that consume them.
struct Tolerances {
  double tri = 1e-9;    // triangle-inequality slack in metric validation
  double snap = 0.0;    // nearest-snap budget for sampled generators
  double pou = 1e-9;    // partition-of-unity sum slack
  double rank = 1e-8;   // relative singular-value threshold
  double eq = 1e-10;    // output-equality threshold for separation tests
};

inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), h);
}

// All randomness flows from one master seed through named streams, so any
// sub-experiment is replayable in isolation.
class StreamRng {
 public:
  StreamRng(uint64_t master_seed, const std::string& stream, uint64_t ordinal = 0)
      : engine_(derive(master_seed, stream, ordinal)) {}

  static uint64_t derive(uint64_t master_seed, const std::string& stream, uint64_t ordinal) {
    uint64_t h = fnv1a(stream);
    h = fnv1a(&ordinal, sizeof(ordinal), h);
    h = fnv1a(&master_seed, sizeof(master_seed), h);
    // splitmix-style finalizer
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ull;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 31;
    return h;
  }

  double uniform01() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  uint64_t uniform_int(uint64_t n) {  // in [0, n)
    return std::uniform_int_distribution<uint64_t>(0, n - 1)(engine_);
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

inline double linf(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(a[i] - b[i]);
    if (d > m) m = d;
  }
  return m;
}

}  // namespace meandim

#endif  // MEANDIM_COMMON_HPP
