#pragma once

#include <string>

namespace specshift {

// pass: explicit bounds, identities and oracles that held.
// info: bounds that contain an empirically estimated constant.
// fail: an identity, oracle or explicit bound that was violated.
enum class Verdict { Pass, Info, Fail };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Info: return "info";
    case Verdict::Fail: return "fail";
  }
  return "?";
}

inline Verdict check(bool ok) { return ok ? Verdict::Pass : Verdict::Fail; }

}  // namespace specshift
