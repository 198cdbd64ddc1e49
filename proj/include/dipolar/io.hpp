#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <type_traits>

#include "dipolar/error.hpp"

namespace dipolar::io {

/// Shortest round-trip-safe decimal: 17 significant digits.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class IoError : public Error
{
  public:
    using Error::Error;
};

/// Minimal CSV writer; fields are numbers or plain identifiers, never quoted.
class CsvWriter
{
  public:
    CsvWriter(const std::string& path, std::initializer_list<std::string_view> header) : out_(path)
    {
        if (!out_) {
            throw IoError("cannot open " + path + " for writing");
        }
        row_strings(header);
    }

    template <typename... Ts>
    void row(const Ts&... fields)
    {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(fields), first = false), ...);
        out_ << '\n';
    }

    void close()
    {
        out_.close();
        if (!out_) {
            throw IoError("write failure");
        }
    }

  private:
    void row_strings(std::initializer_list<std::string_view> fields)
    {
        bool first = true;
        for (auto f : fields) {
            out_ << (first ? "" : ",") << f;
            first = false;
        }
        out_ << '\n';
    }

    static std::string cell(double v) { return format_double(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
    static std::string cell(std::string_view v) { return std::string(v); }
    template <typename I>
        requires std::is_integral_v<I>
    static std::string cell(I v)
    {
        return std::to_string(v);
    }

    std::ofstream out_;
};

} // namespace dipolar::io
