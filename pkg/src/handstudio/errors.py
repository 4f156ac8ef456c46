"""Exception taxonomy for the hand-design pipeline.

Every error carries a stable ``kind`` string so CLI/service layers can emit
machine-readable diagnostics without string-matching messages.
"""


class HandStudioError(Exception):
    kind = "HandStudioError"

    def to_diagnostic(self) -> dict:
        return {"kind": self.kind, "message": str(self)}


class MalformedXml(HandStudioError):
    kind = "MalformedXml"


class UnsupportedJointKind(HandStudioError):
    kind = "UnsupportedJointKind"

    def __init__(self, joint: str, joint_type: str):
        super().__init__(f"joint '{joint}' has unsupported type '{joint_type}'")
        self.joint = joint
        self.joint_type = joint_type


class KinematicCycle(HandStudioError):
    kind = "KinematicCycle"

    def __init__(self, path):
        super().__init__(f"kinematic cycle through links: {' -> '.join(path)}")
        self.path = list(path)


class DuplicateName(HandStudioError):
    kind = "DuplicateName"

    def __init__(self, name: str):
        super().__init__(f"duplicate name '{name}'")
        self.name = name


class MissingLink(HandStudioError):
    kind = "MissingLink"

    def __init__(self, name: str):
        super().__init__(f"joint references missing link '{name}'")
        self.name = name


class NonUnitAxis(HandStudioError):
    kind = "NonUnitAxis"

    def __init__(self, joint: str):
        super().__init__(f"joint '{joint}' has a zero-length axis")
        self.joint = joint


class UnknownJoint(HandStudioError):
    kind = "UnknownJoint"

    def __init__(self, name: str):
        super().__init__(f"unknown joint '{name}'")
        self.name = name


class UnknownLink(HandStudioError):
    kind = "UnknownLink"

    def __init__(self, name: str):
        super().__init__(f"unknown link '{name}'")
        self.name = name


class UnknownOwner(HandStudioError):
    kind = "UnknownOwner"

    def __init__(self, name: str):
        super().__init__(f"patch owner '{name}' is not a link or 'object'")
        self.name = name


class UnknownPatch(HandStudioError):
    kind = "UnknownPatch"

    def __init__(self, patch_id: str):
        super().__init__(f"unknown contact patch '{patch_id}'")
        self.patch_id = patch_id


class MissingAngle(HandStudioError):
    kind = "MissingAngle"

    def __init__(self, joint: str):
        super().__init__(f"no angle supplied for revolute joint '{joint}'")
        self.joint = joint


class DimensionMismatch(HandStudioError):
    kind = "DimensionMismatch"


class InsufficientData(HandStudioError):
    kind = "InsufficientData"

    def __init__(self, finger: str, detail: str = "fewer than 2 samples"):
        super().__init__(f"finger '{finger}': {detail}")
        self.finger = finger


class DegenerateData(HandStudioError):
    kind = "DegenerateData"

    def __init__(self, finger: str):
        super().__init__(f"finger '{finger}': all proximal angles are zero")
        self.finger = finger


class MeshError(HandStudioError):
    kind = "MeshError"


class RankDeficientConstraints(HandStudioError):
    kind = "RankDeficientConstraints"


class NumericalFailure(HandStudioError):
    kind = "NumericalFailure"


class InvalidSchedule(HandStudioError):
    kind = "InvalidSchedule"
