#pragma once

#include <stdexcept>
#include <string>

namespace dbparam {

// Base for every error raised by the library. The category is a stable,
// machine-parseable token (the class name) used by the CLI.
class Error : public std::runtime_error
{
public:
    Error(std::string category, const std::string& message)
        : std::runtime_error(message), category_(std::move(category))
    {
    }

    [[nodiscard]] const std::string& category() const noexcept { return category_; }

private:
    std::string category_;
};

#define DBPARAM_DEFINE_ERROR(Name)                                              \
    class Name : public Error                                                   \
    {                                                                           \
    public:                                                                     \
        explicit Name(const std::string& message) : Error(#Name, message) {}    \
    };

DBPARAM_DEFINE_ERROR(ParseError)
DBPARAM_DEFINE_ERROR(IOError)
DBPARAM_DEFINE_ERROR(TopologyError)
DBPARAM_DEFINE_ERROR(DegenerateFaceError)
DBPARAM_DEFINE_ERROR(DegenerateImageFaceError)
DBPARAM_DEFINE_ERROR(IndexError)
DBPARAM_DEFINE_ERROR(ShapeError)
DBPARAM_DEFINE_ERROR(NotPositiveDefinite)
DBPARAM_DEFINE_ERROR(SingularSystem)
DBPARAM_DEFINE_ERROR(LambdaOutOfRange)
DBPARAM_DEFINE_ERROR(BoundaryOffCircle)
DBPARAM_DEFINE_ERROR(NonPositiveImageArea)
DBPARAM_DEFINE_ERROR(CornerOrderError)
DBPARAM_DEFINE_ERROR(FoldedMapError)
DBPARAM_DEFINE_ERROR(PointLocationFailure)
DBPARAM_DEFINE_ERROR(MissingSidecar)
DBPARAM_DEFINE_ERROR(EmptyInput)
DBPARAM_DEFINE_ERROR(ConfigError)

#undef DBPARAM_DEFINE_ERROR

}  // namespace dbparam
