#pragma once

// Reference reward arithmetic for the acceptance run. Kept free of any
// library headers so it shares no code with the implementation under test.

#include <array>

namespace oracle {

struct Reward {
  long double preference;
  int status;
  long double propensity;
  long double revenue;
};

Reward evaluate(long double bid, long double ask, long double delta, long double benchmark, long double market_value);

struct Best {
  int arm;  // index into the price array
  long double revenue;
};

// Exhaustive search over the four prices: highest revenue, then lowest price, then lowest index.
Best best_arm(long double bid, const std::array<long double, 4>& prices, long double delta, long double benchmark,
              long double market_value);

}  // namespace oracle
