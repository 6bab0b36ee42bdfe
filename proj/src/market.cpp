#include "ccr/market.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ccr/gaussian.hpp"

namespace ccr::market {

BucketGrid::BucketGrid(std::vector<double> times) : times_(std::move(times)) {
    if (times_.empty())
        throw std::invalid_argument("market::BucketGrid: no exposure dates");
    double prev = 0.0;
    for (double t : times_) {
        if (!(t > prev))
            throw std::invalid_argument(
                "market::BucketGrid: dates must be strictly increasing and "
                "start after 0");
        prev = t;
    }
}

std::vector<double> BucketGrid::deltas() const {
    std::vector<double> d(times_.size());
    double prev = 0.0;
    for (std::size_t k = 0; k < times_.size(); ++k) {
        d[k] = times_[k] - prev;
        prev = times_[k];
    }
    return d;
}

BucketGrid default_buckets() {
    return BucketGrid({1.0 / 52, 2.0 / 52, 3.0 / 52, 4.0 / 52, 2.0 / 12,
                       3.0 / 12, 6.0 / 12, 9.0 / 12, 1.0});
}

double underlying_at(const MarketParams& mkt, double t, double z) {
    if (!(mkt.spot > 0.0) || !(mkt.vol > 0.0))
        throw std::invalid_argument("market::underlying_at: need spot, vol > 0");
    if (t < 0.0)
        throw std::domain_error("market::underlying_at: negative time");
    return mkt.spot *
           std::exp((mkt.rate - 0.5 * mkt.vol * mkt.vol) * t +
                    mkt.vol * std::sqrt(t) * z);
}

double bs_price(OptionKind kind, double spot, double strike, double rate,
                double vol, double tau) {
    if (tau < 0.0)
        throw std::domain_error("market::bs_price: negative time to expiry");
    if (!(spot > 0.0) || !(strike > 0.0))
        throw std::invalid_argument("market::bs_price: need spot, strike > 0");
    if (tau == 0.0) {
        const double intrinsic =
            (kind == OptionKind::call) ? spot - strike : strike - spot;
        return intrinsic > 0.0 ? intrinsic : 0.0;
    }
    const double sq = vol * std::sqrt(tau);
    const double d1 = (std::log(spot / strike) + (rate + 0.5 * vol * vol) * tau) / sq;
    const double d2 = d1 - sq;
    const double df = std::exp(-rate * tau);
    if (kind == OptionKind::call)
        return spot * gauss::cdf(d1) - strike * df * gauss::cdf(d2);
    return strike * df * gauss::cdf(-d2) - spot * gauss::cdf(-d1);
}

double position_mtm(const OptionSpec& pos, const MarketParams& mkt, double t,
                    double spot) {
    if (t > pos.maturity) return 0.0;
    const double v =
        bs_price(pos.kind, spot, pos.strike, mkt.rate, mkt.vol, pos.maturity - t);
    return (pos.side == Side::buy ? 1.0 : -1.0) * pos.quantity * v;
}

double portfolio_mtm(const Portfolio& ptf, const MarketParams& mkt, double t,
                     double spot) {
    double v = 0.0;
    for (const OptionSpec& pos : ptf) v += position_mtm(pos, mkt, t, spot);
    return v;
}

namespace {

OptionKind parse_kind(const std::string& s, std::size_t line) {
    if (s == "call") return OptionKind::call;
    if (s == "put") return OptionKind::put;
    std::ostringstream os;
    os << "line " << line << ": unknown option kind \"" << s << "\"";
    throw std::runtime_error(os.str());
}

Side parse_side(const std::string& s, std::size_t line) {
    if (s == "buy") return Side::buy;
    if (s == "sell") return Side::sell;
    std::ostringstream os;
    os << "line " << line << ": unknown side \"" << s << "\"";
    throw std::runtime_error(os.str());
}

double parse_positive(const std::string& s, const char* what,
                      std::size_t line) {
    double v = 0.0;
    try {
        std::size_t pos = 0;
        v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
        std::ostringstream os;
        os << "line " << line << ": malformed " << what << " \"" << s << "\"";
        throw std::runtime_error(os.str());
    }
    if (!(v > 0.0)) {
        std::ostringstream os;
        os << "line " << line << ": " << what << " must be positive";
        throw std::runtime_error(os.str());
    }
    return v;
}

}  // namespace

Portfolio load_portfolio(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("market::load_portfolio: cannot open " +
                                 path.string());
    Portfolio ptf;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string kind, side, strike, maturity, quantity, extra;
        if (!(fields >> kind)) continue;  // blank or comment-only line
        if (!(fields >> side >> strike >> maturity)) {
            std::ostringstream os;
            os << "market::load_portfolio: " << path.string() << " line "
               << lineno << ": expected \"kind side strike maturity [quantity]\"";
            throw std::runtime_error(os.str());
        }
        OptionSpec pos;
        try {
            pos.kind = parse_kind(kind, lineno);
            pos.side = parse_side(side, lineno);
            pos.strike = parse_positive(strike, "strike", lineno);
            pos.maturity = parse_positive(maturity, "maturity", lineno);
            if (fields >> quantity)
                pos.quantity = parse_positive(quantity, "quantity", lineno);
            if (fields >> extra) {
                std::ostringstream os;
                os << "line " << lineno << ": unexpected field \"" << extra
                   << "\"";
                throw std::runtime_error(os.str());
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("market::load_portfolio: " +
                                     path.string() + " " + e.what());
        }
        ptf.push_back(pos);
    }
    if (ptf.empty())
        throw std::runtime_error("market::load_portfolio: " + path.string() +
                                 " contains no positions");
    return ptf;
}

}  // namespace ccr::market
