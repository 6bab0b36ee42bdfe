#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace ccr::market {

enum class OptionKind { call, put };
enum class Side { buy, sell };

// One netted position: a European option with unit or scaled quantity.
// quantity, strike and maturity are positive.
struct OptionSpec {
    OptionKind kind = OptionKind::call;
    Side side = Side::buy;
    double strike = 0.0;
    double maturity = 0.0;
    double quantity = 1.0;
};

using Portfolio = std::vector<OptionSpec>;

// Flat lognormal market: spot and vol positive.
struct MarketParams {
    double spot = 0.0;
    double rate = 0.0;
    double vol = 0.0;
};

// Strictly increasing exposure dates, first one after 0. Delta weights are
// taken against t_0 = 0, so they sum to the horizon t_K.
class BucketGrid {
public:
    explicit BucketGrid(std::vector<double> times);

    const std::vector<double>& times() const { return times_; }
    std::vector<double> deltas() const;
    double horizon() const { return times_.back(); }
    std::size_t size() const { return times_.size(); }

private:
    std::vector<double> times_;
};

// {1w, 2w, 3w, 4w, 2m, 3m, 6m, 9m, 1y} in year fractions.
BucketGrid default_buckets();

// S_t given the standard normal coordinate z of W_t / sqrt(t):
// S_0 exp((r - vol^2/2) t + vol sqrt(t) z).
double underlying_at(const MarketParams& mkt, double t, double z);

// Black-Scholes price. tau = 0 degenerates to intrinsic value; negative tau
// throws std::domain_error.
double bs_price(OptionKind kind, double spot, double strike, double rate,
                double vol, double tau);

// Signed value of one position at time t; expired positions are settled and
// carry no mark.
double position_mtm(const OptionSpec& pos, const MarketParams& mkt, double t,
                    double spot);

// Netted portfolio mark at (t, spot): sum of signed position values.
double portfolio_mtm(const Portfolio& ptf, const MarketParams& mkt, double t,
                     double spot);

// One position per line: "kind side strike maturity [quantity]", '#' starts
// a comment. Throws std::runtime_error naming the offending line.
Portfolio load_portfolio(const std::filesystem::path& path);

}  // namespace ccr::market
