"""Built-in IFC knowledge used by the hashing passes.

The tool never loads EXPRESS schemas, so the few facts it needs about IFC2x3
and IFC4 live here as plain tables. All names are upper case, as written in
exchange files. Attribute positions are zero-based.
"""

from __future__ import annotations

OWNER_HISTORY = "IFCOWNERHISTORY"

# IfcOwnerHistory.LastModifiedDate and .CreationDate
OWNER_HISTORY_TIMESTAMPS = frozenset({4, 7})

# IfcStyledItem.Item
STYLED_BY_ITEM = ("IFCSTYLEDITEM", 0)

# Aggregates declared as SET in the schema; their member order carries no meaning.
UNORDERED_ATTRIBUTES = frozenset(
    {
        ("IFCRELAGGREGATES", 5),
        ("IFCRELCONTAINEDINSPATIALSTRUCTURE", 4),
        ("IFCRELREFERENCEDINSPATIALSTRUCTURE", 4),
        ("IFCRELDEFINESBYPROPERTIES", 4),
        ("IFCRELDEFINESBYTYPE", 4),
        ("IFCRELDEFINESBYTEMPLATE", 4),
        ("IFCRELDEFINESBYOBJECT", 4),
        ("IFCRELASSOCIATESMATERIAL", 4),
        ("IFCRELASSOCIATESCLASSIFICATION", 4),
        ("IFCRELASSOCIATESDOCUMENT", 4),
        ("IFCRELASSOCIATESLIBRARY", 4),
        ("IFCRELASSOCIATESAPPROVAL", 4),
        ("IFCRELASSOCIATESCONSTRAINT", 4),
        ("IFCRELASSIGNSTOGROUP", 4),
        ("IFCRELASSIGNSTOPRODUCT", 4),
        ("IFCRELASSIGNSTOCONTROL", 4),
        ("IFCRELASSIGNSTOACTOR", 4),
        ("IFCRELASSIGNSTOPROCESS", 4),
        ("IFCRELASSIGNSTORESOURCE", 4),
        ("IFCRELSERVICESBUILDINGS", 5),
        ("IFCRELCOVERSBLDGELEMENTS", 5),
        ("IFCRELCOVERSSPACES", 5),
        ("IFCRELDECLARES", 5),
        ("IFCPROPERTYSET", 4),
        ("IFCELEMENTQUANTITY", 5),
        ("IFCPRODUCTDEFINITIONSHAPE", 2),
        ("IFCSHAPEREPRESENTATION", 3),
        ("IFCSTYLEDREPRESENTATION", 3),
        ("IFCPRESENTATIONLAYERASSIGNMENT", 2),
        ("IFCPRESENTATIONLAYERWITHSTYLE", 2),
        ("IFCSTYLEDITEM", 1),
        ("IFCSURFACESTYLE", 2),
        ("IFCPRESENTATIONSTYLEASSIGNMENT", 0),
        ("IFCUNITASSIGNMENT", 0),
        ("IFCPROJECT", 7),
        ("IFCCOMPLEXPROPERTY", 3),
    }
)

# IfcElement and every subtype (IFC4 ADD2 and IFC2x3 TC1). Their GlobalIds are
# stable across exports and are never rewritten.
ELEMENT_TYPES = frozenset(
    """
    IFCELEMENT IFCBUILDINGELEMENT IFCBEAM IFCBEAMSTANDARDCASE IFCBUILDINGELEMENTPROXY
    IFCCHIMNEY IFCCOLUMN IFCCOLUMNSTANDARDCASE IFCCOVERING IFCCURTAINWALL IFCDOOR
    IFCDOORSTANDARDCASE IFCFOOTING IFCMEMBER IFCMEMBERSTANDARDCASE IFCPILE IFCPLATE
    IFCPLATESTANDARDCASE IFCRAILING IFCRAMP IFCRAMPFLIGHT IFCROOF IFCSHADINGDEVICE
    IFCSLAB IFCSLABELEMENTEDCASE IFCSLABSTANDARDCASE IFCSTAIR IFCSTAIRFLIGHT IFCWALL
    IFCWALLELEMENTEDCASE IFCWALLSTANDARDCASE IFCWINDOW IFCWINDOWSTANDARDCASE
    IFCBUILDINGELEMENTCOMPONENT IFCCIVILELEMENT IFCDISTRIBUTIONELEMENT
    IFCDISTRIBUTIONCONTROLELEMENT IFCACTUATOR IFCALARM IFCCONTROLLER IFCFLOWINSTRUMENT
    IFCPROTECTIVEDEVICETRIPPINGUNIT IFCSENSOR IFCUNITARYCONTROLELEMENT
    IFCDISTRIBUTIONFLOWELEMENT IFCDISTRIBUTIONCHAMBERELEMENT IFCENERGYCONVERSIONDEVICE
    IFCAIRTOAIRHEATRECOVERY IFCBOILER IFCBURNER IFCCHILLER IFCCOIL IFCCONDENSER
    IFCCOOLEDBEAM IFCCOOLINGTOWER IFCELECTRICGENERATOR IFCELECTRICMOTOR IFCENGINE
    IFCEVAPORATIVECOOLER IFCEVAPORATOR IFCHEATEXCHANGER IFCHUMIDIFIER
    IFCMOTORCONNECTION IFCSOLARDEVICE IFCTRANSFORMER IFCTUBEBUNDLE IFCUNITARYEQUIPMENT
    IFCFLOWCONTROLLER IFCAIRTERMINALBOX IFCDAMPER IFCELECTRICDISTRIBUTIONBOARD
    IFCELECTRICTIMECONTROL IFCFLOWMETER IFCPROTECTIVEDEVICE IFCSWITCHINGDEVICE IFCVALVE
    IFCFLOWFITTING IFCCABLECARRIERFITTING IFCCABLEFITTING IFCDUCTFITTING IFCJUNCTIONBOX
    IFCPIPEFITTING IFCFLOWMOVINGDEVICE IFCCOMPRESSOR IFCFAN IFCPUMP IFCFLOWSEGMENT
    IFCCABLECARRIERSEGMENT IFCCABLESEGMENT IFCDUCTSEGMENT IFCPIPESEGMENT
    IFCFLOWSTORAGEDEVICE IFCELECTRICFLOWSTORAGEDEVICE IFCTANK IFCFLOWTERMINAL
    IFCAIRTERMINAL IFCAUDIOVISUALAPPLIANCE IFCCOMMUNICATIONSAPPLIANCE
    IFCELECTRICAPPLIANCE IFCFIRESUPPRESSIONTERMINAL IFCLAMP IFCLIGHTFIXTURE
    IFCMEDICALDEVICE IFCOUTLET IFCSANITARYTERMINAL IFCSPACEHEATER IFCSTACKTERMINAL
    IFCWASTETERMINAL IFCFLOWTREATMENTDEVICE IFCDUCTSILENCER IFCFILTER IFCINTERCEPTOR
    IFCELEMENTASSEMBLY IFCELEMENTCOMPONENT IFCBUILDINGELEMENTPART IFCDISCRETEACCESSORY
    IFCFASTENER IFCMECHANICALFASTENER IFCREINFORCINGELEMENT IFCREINFORCINGBAR
    IFCREINFORCINGMESH IFCTENDON IFCTENDONANCHOR IFCVIBRATIONISOLATOR
    IFCFEATUREELEMENT IFCFEATUREELEMENTADDITION IFCPROJECTIONELEMENT
    IFCFEATUREELEMENTSUBTRACTION IFCOPENINGELEMENT IFCOPENINGSTANDARDCASE
    IFCVOIDINGFEATURE IFCSURFACEFEATURE IFCFURNISHINGELEMENT IFCFURNITURE
    IFCSYSTEMFURNITUREELEMENT IFCGEOGRAPHICELEMENT IFCTRANSPORTELEMENT
    IFCVIRTUALELEMENT IFCEQUIPMENTELEMENT IFCELECTRICALELEMENT
    IFCELECTRICDISTRIBUTIONPOINT IFCEDGEFEATURE IFCCHAMFEREDGEFEATURE
    IFCROUNDEDEDGEFEATURE
    """.split()
)

# IfcRoot subtypes that are neither relationships (IFCREL*) nor type objects
# (*TYPE); those two families are recognised by name in is_root_type().
_OTHER_ROOT_TYPES = frozenset(
    """
    IFCROOT IFCOBJECTDEFINITION IFCCONTEXT IFCPROJECT IFCPROJECTLIBRARY IFCOBJECT
    IFCACTOR IFCOCCUPANT IFCCONTROL IFCACTIONREQUEST IFCCOSTITEM IFCCOSTSCHEDULE
    IFCPERFORMANCEHISTORY IFCPERMIT IFCPROJECTORDER IFCWORKCALENDAR IFCWORKCONTROL
    IFCWORKPLAN IFCWORKSCHEDULE IFCSCHEDULETIMECONTROL IFCSERVICELIFE
    IFCTIMESERIESSCHEDULE IFCCONDITION IFCCONDITIONCRITERION IFCEQUIPMENTSTANDARD
    IFCFURNITURESTANDARD IFCPROJECTORDERRECORD IFCSPACEPROGRAM IFCGROUP IFCASSET
    IFCINVENTORY IFCSTRUCTURALLOADGROUP IFCSTRUCTURALLOADCASE IFCSTRUCTURALRESULTGROUP
    IFCSYSTEM IFCBUILDINGSYSTEM IFCDISTRIBUTIONSYSTEM IFCDISTRIBUTIONCIRCUIT
    IFCELECTRICALCIRCUIT IFCSTRUCTURALANALYSISMODEL IFCZONE IFCPROCESS IFCEVENT
    IFCPROCEDURE IFCTASK IFCMOVE IFCORDERACTION IFCPRODUCT IFCANNOTATION IFCGRID
    IFCPORT IFCDISTRIBUTIONPORT IFCPROXY IFCSPATIALELEMENT IFCEXTERNALSPATIALELEMENT
    IFCEXTERNALSPATIALSTRUCTUREELEMENT IFCSPATIALSTRUCTUREELEMENT IFCBUILDING
    IFCBUILDINGSTOREY IFCSITE IFCSPACE IFCSPATIALZONE IFCSTRUCTURALACTIVITY
    IFCSTRUCTURALACTION IFCSTRUCTURALCURVEACTION IFCSTRUCTURALLINEARACTION
    IFCSTRUCTURALPLANARACTION IFCSTRUCTURALPOINTACTION IFCSTRUCTURALSURFACEACTION
    IFCSTRUCTURALREACTION IFCSTRUCTURALCURVEREACTION IFCSTRUCTURALPOINTREACTION
    IFCSTRUCTURALSURFACEREACTION IFCSTRUCTURALITEM IFCSTRUCTURALCONNECTION
    IFCSTRUCTURALCURVECONNECTION IFCSTRUCTURALPOINTCONNECTION
    IFCSTRUCTURALSURFACECONNECTION IFCSTRUCTURALMEMBER IFCSTRUCTURALCURVEMEMBER
    IFCSTRUCTURALCURVEMEMBERVARYING IFCSTRUCTURALSURFACEMEMBER
    IFCSTRUCTURALSURFACEMEMBERVARYING IFCRESOURCE IFCCONSTRUCTIONRESOURCE
    IFCCONSTRUCTIONEQUIPMENTRESOURCE IFCCONSTRUCTIONMATERIALRESOURCE
    IFCCONSTRUCTIONPRODUCTRESOURCE IFCCREWRESOURCE IFCLABORRESOURCE
    IFCSUBCONTRACTRESOURCE IFCTYPEOBJECT IFCTYPEPRODUCT IFCTYPEPROCESS IFCTYPERESOURCE
    IFCPROPERTYDEFINITION IFCPROPERTYSETDEFINITION IFCPROPERTYSET IFCELEMENTQUANTITY
    IFCQUANTITYSET IFCPREDEFINEDPROPERTYSET IFCDOORLININGPROPERTIES
    IFCDOORPANELPROPERTIES IFCPERMEABLECOVERINGPROPERTIES
    IFCREINFORCEMENTDEFINITIONPROPERTIES IFCWINDOWLININGPROPERTIES
    IFCWINDOWPANELPROPERTIES IFCPROPERTYSETTEMPLATE IFCPROPERTYTEMPLATE
    IFCPROPERTYTEMPLATEDEFINITION IFCSIMPLEPROPERTYTEMPLATE IFCCOMPLEXPROPERTYTEMPLATE
    IFCENERGYPROPERTIES IFCELECTRICALBASEPROPERTIES IFCFLUIDFLOWPROPERTIES
    IFCSOUNDPROPERTIES IFCSOUNDVALUE IFCSPACETHERMALLOADPROPERTIES
    IFCSERVICELIFEFACTOR
    """.split()
) | ELEMENT_TYPES


def is_root_type(type_name: str) -> bool:
    if type_name in _OTHER_ROOT_TYPES:
        return True
    if type_name.startswith("IFCREL") and type_name != "IFCRELAXATION":
        return True
    return type_name.endswith("TYPE")


def is_element_type(type_name: str, element_types=ELEMENT_TYPES) -> bool:
    return type_name in element_types
