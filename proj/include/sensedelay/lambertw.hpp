#pragma once

namespace sensedelay {

enum class Branch { Principal, Minus1 };

/// Real Lambert W: the w with w e^w = x on the requested branch.
///
/// Principal is defined on [-1/e, inf) with range [-1, inf); Minus1 on
/// [-1/e, 0) with range (-inf, -1]. Inputs within 1e-12 of -1/e return -1.
/// Out-of-domain inputs throw Error(ErrorCode::Domain).
double lambert_w(Branch branch, double x);

}  // namespace sensedelay
