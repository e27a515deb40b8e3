"""Exception hierarchy shared by all tikzlab modules."""


class TikzLabError(Exception):
    """Base class for all toolkit errors."""


# corpus
class CycleDetected(TikzLabError):
    """Include graph recursion exceeded the depth cap."""


class UnbalancedEnvironment(TikzLabError):
    """A \\begin{tikzpicture} without a matching \\end."""


class MalformedDump(TikzLabError):
    """A Stack Exchange dump row failed to parse."""


# compiler
class EngineMissing(TikzLabError):
    """No TeX engine found on the executable search path."""


class ConverterMissing(TikzLabError):
    """No PDF-to-PNG converter found."""


class CorruptPdf(TikzLabError):
    """The PDF could not be rasterized."""


class CompilerUnavailable(TikzLabError):
    """Compilability filtering requested but no engine is usable."""


# repair
class SamplerFailure(TikzLabError):
    """The sampler subprocess violated the wire protocol."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class EmptyInput(TikzLabError):
    """An aggregate was requested over an empty collection."""


# linear algebra / metrics
class DimensionMismatch(TikzLabError):
    """Vector or matrix shapes are inconsistent."""


class ZeroVector(TikzLabError):
    """Cosine similarity is undefined for a zero vector."""


class TooFewSamples(TikzLabError):
    """KID needs at least two samples per side."""


class EmptyCorpus(TikzLabError):
    """CrystalBLEU needs non-empty aligned corpora."""


class MissingAlignment(TikzLabError):
    """Prediction and reference records could not be aligned by id."""


class EmbedderUnavailable(TikzLabError):
    """The embedding provider could not be reached."""


# analysis
class NoNGrams(TikzLabError):
    """The input is shorter than the requested n-gram order."""


class EmptyGroup(TikzLabError):
    """A per-system statistic was requested for an empty group."""


# bws
class InvalidRecord(TikzLabError):
    """An annotation record violates the 4-tuple protocol."""


class Unsplittable(TikzLabError):
    """No half-split with full item coverage was found."""


class LengthMismatch(TikzLabError):
    """Paired sequences have different lengths."""


class DegenerateInput(TikzLabError):
    """Correlation is undefined for a constant vector."""


class DegenerateRange(TikzLabError):
    """Min-max normalization is undefined when all values are equal."""


# cli
class ConfigInvalid(TikzLabError):
    """The effective configuration is unusable."""
