#pragma once

#include <stdexcept>
#include <string>

namespace posegan {

// Error taxonomy shared by the library and the CLI. The CLI prints these as
// "error:<domain>:<detail>" on stderr and maps the domain to an exit code.
class Error : public std::runtime_error {
public:
    Error(std::string domain, const std::string& detail)
        : std::runtime_error(detail), domain_(std::move(domain)) {}
    const std::string& domain() const { return domain_; }

private:
    std::string domain_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& d) : Error("shape", d) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& d) : Error("config", d) {}
};
struct ParamError : Error {
    explicit ParamError(const std::string& d) : Error("param", d) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& d) : Error("format", d) {}
};
struct IoError : Error {
    explicit IoError(const std::string& d) : Error("io", d) {}
};
struct SamplingError : Error {
    explicit SamplingError(const std::string& d) : Error("sampling", d) {}
};
struct IndexError : Error {
    explicit IndexError(const std::string& d) : Error("index", d) {}
};
struct DataError : Error {
    explicit DataError(const std::string& d) : Error("data", d) {}
};

} // namespace posegan
