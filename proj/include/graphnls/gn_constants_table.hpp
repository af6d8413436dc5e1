#pragma once

// Generated by tools/gn_constants_oracle.py -- do not edit by hand.
// oracle_version: gamma-closed-form-v1

#include <array>
#include <utility>

namespace graphnls::detail {

inline constexpr const char* kGnOracleVersion = "gamma-closed-form-v1";

inline constexpr std::array<std::pair<double, double>, 40> kGnConstantTable = {{
    {2.0, 1.0},
    {2.1, 0.99898054664387459},
    {2.2, 0.99913581973212117},
    {2.3, 1.0003969602095657},
    {2.4, 1.0027038889014339},
    {2.5, 1.0060042346306377},
    {2.6, 1.0102524147847104},
    {2.7, 1.0154088439854143},
    {2.8, 1.021439251276282},
    {2.9, 1.0283140897993148},
    {3.0, 1.0360080256445406},
    {3.1, 1.04449949468323},
    {3.2, 1.0537703179089694},
    {3.3, 1.0638053672212888},
    {3.4, 1.0745922747658256},
    {3.5, 1.0861211799408688},
    {3.6, 1.0983845090260647},
    {3.7, 1.1113767831099449},
    {3.8, 1.1250944506081961},
    {3.9, 1.1395357411900706},
    {4.0, 1.1547005383792515},
    {4.1, 1.1705902684790627},
    {4.2, 1.1872078037997337},
    {4.3, 1.204557378445691},
    {4.4, 1.2226445151605874},
    {4.5, 1.2414759619329947},
    {4.6, 1.2610596372415158},
    {4.7, 1.2814045829688725},
    {4.8, 1.3025209241440271},
    {4.9, 1.324419834782753},
    {5.0, 1.3471135091929598},
    {5.1, 1.3706151381937888},
    {5.2, 1.3949388897689426},
    {5.3, 1.4200998937365528},
    {5.4, 1.4461142300714937},
    {5.5, 1.4729989205626194},
    {5.6, 1.5007719235279241},
    {5.7, 1.5294521313459629},
    {5.8, 1.5590593705927491},
    {5.9, 1.5896144046003845},
}};

} // namespace graphnls::detail
