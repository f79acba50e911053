#pragma once

// Umbrella header: exact canonical forms of integral quadratic forms over
// Z/p^k, with Conway-Sloane style symbols and explicit witnesses.

#include "padiq/block_diagonal.hpp"
#include "padiq/canonical.hpp"
#include "padiq/integers.hpp"
#include "padiq/matrix.hpp"
#include "padiq/oracle.hpp"
#include "padiq/rational_diagonal.hpp"
#include "padiq/represent.hpp"
#include "padiq/symbols.hpp"
