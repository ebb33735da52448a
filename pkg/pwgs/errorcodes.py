# These are the RetVal error constants used to report domain failures. Generic failures use the
# constants exported by retval itself.

# Graph construction and vertex sets
LoopEdge = 'LoopEdge'
DuplicateEdge = 'DuplicateEdge'
Disconnected = 'Disconnected'
EmptyGraph = 'EmptyGraph'
VertexOutOfRange = 'VertexOutOfRange'
InvalidParameter = 'InvalidParameter'

# Spectral engine
DimensionMismatch = 'DimensionMismatch'
SizeLimitExceeded = 'SizeLimitExceeded'
EmptyBand = 'EmptyBand'

# Poincaré constants
EmptySet = 'EmptySet'
FullVertexSet = 'FullVertexSet'
NoFiniteLambda = 'NoFiniteLambda'
NotIndependent = 'NotIndependent'
OverlappingClosures = 'OverlappingClosures'

# Frames and sampling
EmptySamplingSet = 'EmptySamplingSet'
NotASamplingSet = 'NotASamplingSet'
SampleIndexMismatch = 'SampleIndexMismatch'
BandTooWide = 'BandTooWide'
ZeroBandwidth = 'ZeroBandwidth'
ComplementEmpty = 'ComplementEmpty'

# Set search
NoAdmissibleSet = 'NoAdmissibleSet'
InfeasibleTarget = 'InfeasibleTarget'

# Command line
UnknownSubcommand = 'UnknownSubcommand'
TheoremViolation = 'TheoremViolation'
